"""Extraction specs and the media -> EVCF operations."""

import math
from dataclasses import dataclass

from .encoders import get_encoder
from .errors import EncoderError, InvalidSpec
from .evcf import write_evcf
from .media import decode_audio, decode_video

MODALITIES = ("video", "audio")


@dataclass(frozen=True)
class ExtractionSpec:
    """What to extract: which file, how to read it, which encoder.

    rate_hz is the frame sampling rate for video and the hop rate for
    audio; either way it becomes the EVCF header rate.  pooling names
    the token reduction and only spatial mean is implemented.
    """

    media: str
    modality: str
    encoder: str
    rate_hz: float
    pooling: str = "mean"

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise InvalidSpec(
                f"modality must be one of {MODALITIES}, got {self.modality!r}"
            )
        rate = self.rate_hz
        if not isinstance(rate, (int, float)) or isinstance(rate, bool):
            raise InvalidSpec(f"rate_hz must be a number, got {rate!r}")
        if not math.isfinite(rate) or rate <= 0.0:
            raise InvalidSpec(f"rate_hz must be finite and > 0, got {rate!r}")
        if not self.encoder:
            raise InvalidSpec("encoder tag must be a non-empty string")
        if self.pooling != "mean":
            raise InvalidSpec(f"unsupported pooling {self.pooling!r}, only 'mean'")


def _encoder_for(spec):
    enc = get_encoder(spec.encoder)
    if enc.modality != spec.modality:
        raise EncoderError(
            f"encoder {spec.encoder!r} handles {enc.modality}, not {spec.modality}"
        )
    return enc


def extract_video_features(spec, out_path):
    """Sample spec.media at spec.rate_hz fps, encode, write EVCF."""
    enc = _encoder_for(spec)
    frames = decode_video(spec.media, spec.rate_hz)
    feats = enc.encode_frames(frames)
    write_evcf(out_path, feats, spec.rate_hz, spec.encoder)
    return feats.shape


def extract_audio_features(spec, out_path):
    """Hop over spec.media at spec.rate_hz, encode, write EVCF."""
    enc = _encoder_for(spec)
    samples, sample_rate = decode_audio(spec.media)
    feats = enc.encode_clip(samples, sample_rate, spec.rate_hz)
    write_evcf(out_path, feats, spec.rate_hz, spec.encoder)
    return feats.shape


def extract_features(spec, out_path):
    """Dispatch on spec.modality; returns the (l_f, d_f) written."""
    if spec.modality == "video":
        return extract_video_features(spec, out_path)
    return extract_audio_features(spec, out_path)
