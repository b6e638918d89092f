"""Media decoding: animated images for video, PCM WAV for audio.

Video clips are any animated container Pillow can open (GIF is the one
exercised in the tests).  Frames are resampled onto a uniform grid at
the requested rate by holding the most recent source frame, which is
what a player would show at that instant.  Audio is PCM WAV via the
stdlib; multi-channel input is downmixed to mono by averaging.
"""

import wave

import numpy as np
from PIL import Image, ImageSequence, UnidentifiedImageError

from .errors import MediaError

DEFAULT_FRAME_SECONDS = 0.1


def decode_video(path, fps):
    """Decode a clip and sample it at fps Hz.

    Returns a (count, height, width, 3) float64 array in [0, 1], where
    count = floor(clip duration * fps).  Samples are taken at window
    midpoints (k + 0.5) / fps, each mapped to the source frame on
    screen at that time.
    """
    try:
        img = Image.open(path)
    except FileNotFoundError as exc:
        raise MediaError(f"no such media file: {path}") from exc
    except (UnidentifiedImageError, OSError) as exc:
        raise MediaError(f"cannot decode {path}: {exc}") from exc

    frames = []
    starts = []
    clock = 0.0
    with img:
        try:
            for frame in ImageSequence.Iterator(img):
                dur_ms = frame.info.get("duration", img.info.get("duration", 0))
                dur = dur_ms / 1000.0 if dur_ms and dur_ms > 0 else DEFAULT_FRAME_SECONDS
                rgb = np.asarray(frame.convert("RGB"), dtype=np.float64) / 255.0
                frames.append(rgb)
                starts.append(clock)
                clock += dur
        except OSError as exc:
            raise MediaError(f"cannot decode {path}: {exc}") from exc

    if not frames:
        raise MediaError(f"{path}: no frames decoded")
    count = int(np.floor(clock * fps + 1e-9))
    if count < 2:
        raise MediaError(
            f"{path}: clip too short, only {count} sample(s) at {fps} Hz "
            f"(duration {clock:.3f} s, need at least 2)"
        )
    times = (np.arange(count) + 0.5) / fps
    idx = np.searchsorted(np.asarray(starts), times, side="right") - 1
    idx = np.clip(idx, 0, len(frames) - 1)
    return np.stack([frames[i] for i in idx])


_PCM_DECODE = {
    1: (np.uint8, 128.0, 128.0),
    2: (np.dtype("<i2"), 0.0, 32768.0),
    4: (np.dtype("<i4"), 0.0, 2147483648.0),
}


def decode_audio(path):
    """Decode a PCM WAV file to (mono float64 samples in [-1, 1], sample rate)."""
    try:
        with wave.open(str(path), "rb") as wf:
            nch = wf.getnchannels()
            width = wf.getsampwidth()
            sr = wf.getframerate()
            nframes = wf.getnframes()
            raw = wf.readframes(nframes)
    except FileNotFoundError as exc:
        raise MediaError(f"no such media file: {path}") from exc
    except (wave.Error, EOFError, OSError) as exc:
        raise MediaError(f"cannot decode {path}: {exc}") from exc

    if width not in _PCM_DECODE:
        raise MediaError(f"{path}: unsupported PCM sample width {width} bytes")
    if sr <= 0 or nch < 1:
        raise MediaError(f"{path}: bad WAV header (rate {sr}, channels {nch})")
    dtype, offset, scale = _PCM_DECODE[width]
    x = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    if nch > 1:
        usable = (x.size // nch) * nch
        x = x[:usable].reshape(-1, nch).mean(axis=1)
    return (x - offset) / scale, sr
