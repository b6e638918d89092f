"""Feature-sequence container and EVCF file I/O.

EVCF is a little-endian binary container for one time-major feature matrix:

    magic     4 bytes  b"EVCF"
    version   u32      currently 1
    d_f       u32      feature dimension per frame
    l_f       u32      number of frames
    rate_hz   f64      frame rate of the grid
    tag_len   u16      byte length of the source tag
    tag       tag_len  UTF-8 source tag (encoder name etc.)
    payload   l_f * d_f float32, frame-major (row = frame)

Storage is float32; everything in memory is float64. The reader checks the
declared payload against the actual file size before touching it, so a bogus
header can never trigger a huge allocation.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptFile,
    FormatError,
    InvalidData,
    IoError,
    UnsupportedVersion,
)

MAGIC = b"EVCF"
VERSION = 1

_HEADER = struct.Struct("<4sIIIdH")


@dataclass(frozen=True)
class FeatureSequence:
    """One encoder's output for one clip: l_f frames of d_f values."""

    data: np.ndarray
    rate_hz: float
    source_tag: str = ""

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise InvalidData(f"feature data must be 2-D (frames x dims), got ndim={arr.ndim}")
        l_f, d_f = arr.shape
        if l_f < 2:
            raise InvalidData(f"need at least 2 frames, got {l_f}")
        if d_f < 1:
            raise InvalidData("feature dimension must be >= 1")
        if not np.isfinite(arr).all():
            raise InvalidData("feature values must be finite")
        rate = float(self.rate_hz)
        if not np.isfinite(rate) or rate <= 0.0:
            raise InvalidData(f"rate_hz must be finite and > 0, got {rate!r}")
        if not isinstance(self.source_tag, str):
            raise InvalidData("source_tag must be a string")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "rate_hz", rate)

    @property
    def d_f(self) -> int:
        return self.data.shape[1]

    @property
    def l_f(self) -> int:
        return self.data.shape[0]

    @property
    def duration_s(self) -> float:
        """Span of the frame grid in seconds."""
        return self.l_f / self.rate_hz


def write_features(seq: FeatureSequence, path) -> None:
    """Serialize seq to an EVCF file (float32 payload)."""
    tag = seq.source_tag.encode("utf-8")
    if len(tag) > 0xFFFF:
        raise InvalidData("source_tag longer than 65535 bytes")
    header = _HEADER.pack(MAGIC, VERSION, seq.d_f, seq.l_f, seq.rate_hz, len(tag))
    payload = seq.data.astype("<f4").tobytes(order="C")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(tag)
            fh.write(payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_features(path) -> FeatureSequence:
    """Parse an EVCF file, widening the payload to float64."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) < 4 or head[:4] != MAGIC:
                raise FormatError(f"{path}: not an EVCF file")
            if len(head) < _HEADER.size:
                raise CorruptFile(f"{path}: truncated header")
            _, version, d_f, l_f, rate_hz, tag_len = _HEADER.unpack(head)
            if version != VERSION:
                raise UnsupportedVersion(f"{path}: EVCF version {version}, expected {VERSION}")
            if d_f < 1:
                raise InvalidData(f"{path}: d_f must be >= 1, got {d_f}")
            if l_f < 2:
                raise InvalidData(f"{path}: l_f must be >= 2, got {l_f}")
            if not np.isfinite(rate_hz) or rate_hz <= 0.0:
                raise InvalidData(f"{path}: rate_hz must be finite and > 0, got {rate_hz!r}")

            payload_bytes = 4 * d_f * l_f  # python ints, no overflow
            expected = _HEADER.size + tag_len + payload_bytes
            actual = os.fstat(fh.fileno()).st_size
            if actual < expected:
                raise CorruptFile(
                    f"{path}: payload truncated ({actual} bytes, header declares {expected})"
                )
            if actual > expected:
                raise CorruptFile(
                    f"{path}: {actual - expected} trailing bytes after declared payload"
                )

            tag_raw = fh.read(tag_len)
            if len(tag_raw) < tag_len:
                raise CorruptFile(f"{path}: truncated source tag")
            try:
                tag = tag_raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise InvalidData(f"{path}: source tag is not valid UTF-8") from exc

            raw = fh.read(payload_bytes)
            if len(raw) < payload_bytes:
                raise CorruptFile(f"{path}: payload truncated mid-read")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    values = np.frombuffer(raw, dtype="<f4").reshape(l_f, d_f).astype(np.float64)
    if not np.isfinite(values).all():
        raise InvalidData(f"{path}: payload contains non-finite values")
    return FeatureSequence(data=values, rate_hz=rate_hz, source_tag=tag)
