"""Standalone EVCF writer.

EVCF is a little-endian container: a fixed header (magic ``EVCF``,
format version, feature dimension d_f, frame count l_f, frame rate in
Hz, tag byte length), then the UTF-8 source tag, then the payload as
float32 values in frame-major order.  The writer below produces that
layout from scratch so the adapter stays decoupled from any consumer.
"""

import struct

import numpy as np

from .errors import InvalidSpec

MAGIC = b"EVCF"
VERSION = 1

_HEADER = struct.Struct("<4sIIIdH")


def write_evcf(path, data, rate_hz, source_tag):
    """Write a (l_f, d_f) float array as an EVCF file.

    Validates the same invariants consumers enforce on read, so a file
    that leaves this function is well formed by construction: at least
    two frames, at least one dimension, finite values, positive finite
    rate, and a tag that fits in 16 bits of UTF-8 length.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidSpec(f"feature array must be 2-D, got shape {arr.shape}")
    l_f, d_f = arr.shape
    if l_f < 2:
        raise InvalidSpec(f"need at least 2 frames, got {l_f}")
    if d_f < 1:
        raise InvalidSpec(f"need at least 1 feature dimension, got {d_f}")
    if not np.all(np.isfinite(arr)):
        raise InvalidSpec("feature array contains non-finite values")
    rate = float(rate_hz)
    if not np.isfinite(rate) or rate <= 0.0:
        raise InvalidSpec(f"rate_hz must be finite and > 0, got {rate_hz!r}")
    tag = str(source_tag).encode("utf-8")
    if len(tag) > 0xFFFF:
        raise InvalidSpec("source tag longer than 65535 bytes")

    header = _HEADER.pack(MAGIC, VERSION, d_f, l_f, rate, len(tag))
    payload = arr.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(tag)
        fh.write(payload)
