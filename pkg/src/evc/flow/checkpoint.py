"""Model checkpoints: EVFM binary format.

Little-endian layout:

    magic    4 bytes  b"EVFM"
    version  u32      currently 1
    arch     7 x u32  channels, length, hidden1, hidden2,
                      t_emb_dim, class_emb_dim, class_count
    params   float64  w1, b1, w2, b2, w3, b3, emb (row-major, in this order)
    crc      u32      CRC32 of every preceding byte
"""

from __future__ import annotations

import os
import struct
import zlib

import numpy as np

from ..errors import (
    CorruptFile,
    FormatError,
    InvalidData,
    IoError,
    UnsupportedVersion,
)
from .model import PARAM_ORDER, FlowArch, FlowModel

MAGIC = b"EVFM"
VERSION = 1

_HEAD = struct.Struct("<4sI7I")


def save_model(model: FlowModel, path) -> None:
    """Write the model to an EVFM file with a trailing CRC32."""
    a = model.arch
    blob = _HEAD.pack(
        MAGIC,
        VERSION,
        a.channels,
        a.length,
        a.hidden1,
        a.hidden2,
        a.t_emb_dim,
        a.class_emb_dim,
        a.class_count,
    )
    parts = [blob]
    for name in PARAM_ORDER:
        arr = model.params[name]
        if not np.isfinite(arr).all():
            raise InvalidData(f"parameter {name!r} contains non-finite values")
        parts.append(arr.astype("<f8").tobytes(order="C"))
    body = b"".join(parts)
    crc = zlib.crc32(body) & 0xFFFFFFFF
    try:
        with open(path, "wb") as fh:
            fh.write(body)
            fh.write(struct.pack("<I", crc))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_model(path) -> FlowModel:
    """Read an EVFM file, verifying size and CRC before deserializing."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(_HEAD.size)
            if len(head) < 4 or head[:4] != MAGIC:
                raise FormatError(f"{path}: not an EVFM file")
            if len(head) < _HEAD.size:
                raise CorruptFile(f"{path}: truncated header")
            _, version, *dims = _HEAD.unpack(head)
            if version != VERSION:
                raise UnsupportedVersion(f"{path}: EVFM version {version}, expected {VERSION}")
            try:
                arch = FlowArch(*dims)
            except InvalidData as exc:
                raise InvalidData(f"{path}: bad architecture header: {exc}") from exc

            shapes = FlowModel._shapes(arch)
            param_bytes = sum(
                8 * int(np.prod(shapes[name])) for name in PARAM_ORDER
            )
            expected = _HEAD.size + param_bytes + 4
            actual = os.fstat(fh.fileno()).st_size
            if actual != expected:
                raise CorruptFile(
                    f"{path}: size {actual} does not match declared architecture ({expected})"
                )
            body = fh.read(param_bytes)
            if len(body) < param_bytes:
                raise CorruptFile(f"{path}: parameter block truncated")
            (crc_stored,) = struct.unpack("<I", fh.read(4))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    crc = zlib.crc32(head + body) & 0xFFFFFFFF
    if crc != crc_stored:
        raise CorruptFile(f"{path}: CRC mismatch")

    params: dict[str, np.ndarray] = {}
    offset = 0
    for name in PARAM_ORDER:
        shape = shapes[name]
        count = int(np.prod(shape))
        chunk = body[offset : offset + 8 * count]
        params[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += 8 * count
    model = FlowModel(arch, params)
    for name, arr in model.params.items():
        if not np.isfinite(arr).all():
            raise InvalidData(f"{path}: parameter {name!r} contains non-finite values")
    return model
