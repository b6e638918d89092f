"""Encoder registry and the built-in deterministic encoders.

Encoders are looked up by string tag, and the tag travels verbatim into
the EVCF source tag so downstream tools can tell which embedding space
a file lives in.  The built-ins are fixed random projections seeded
from the tag: they stand in for learned checkpoints while exercising
the exact interface a real one would plug into (same registry, same
encode calls, same pooling), and they are bitwise reproducible, which
the conformance tests rely on.
"""

import hashlib

import numpy as np

from .errors import EncoderError, MediaError

_REGISTRY = {}


def register_encoder(tag, factory):
    """Register factory() under tag, replacing any previous entry."""
    _REGISTRY[str(tag)] = factory


def get_encoder(tag):
    try:
        factory = _REGISTRY[tag]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY)) or "none"
        raise EncoderError(f"unknown encoder {tag!r} (registered: {known})") from None
    return factory(tag)


def available_encoders():
    return sorted(_REGISTRY)


def _tag_rng(tag):
    """Deterministic generator derived only from the tag string."""
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return np.random.default_rng(list(digest[:16]))


class PatchMeanEncoder:
    """Video frames -> per-frame embeddings via patch tokens + mean pool.

    Each frame is cut into a grid x grid array of cells, every cell is
    reduced to its per-channel mean (one token of 3 values), tokens go
    through a fixed tag-seeded projection with a tanh, and the token
    embeddings are mean-pooled over space.  Constant frames therefore
    map to identical embeddings.
    """

    modality = "video"
    dim = 32
    grid = 8

    def __init__(self, tag):
        rng = _tag_rng(tag)
        self.w = rng.standard_normal((3, self.dim)) / np.sqrt(3.0)
        self.b = 0.1 * rng.standard_normal(self.dim)

    def encode_frames(self, frames):
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 4 or frames.shape[3] != 3:
            raise MediaError(f"expected (count, h, w, 3) frames, got {frames.shape}")
        out = np.empty((frames.shape[0], self.dim))
        for t in range(frames.shape[0]):
            rows = np.array_split(frames[t], self.grid, axis=0)
            tokens = np.array(
                [cell.mean(axis=(0, 1)) for row in rows
                 for cell in np.array_split(row, self.grid, axis=1)]
            )
            emb = np.tanh(tokens @ self.w + self.b)
            out[t] = emb.mean(axis=0)
        return out


class SpectralMeanEncoder:
    """Audio samples -> per-hop embeddings via magnitude spectra.

    The signal is split into non-overlapping hops, each hop is reduced
    to the log1p magnitude of its first spectral bins, and those are
    sent through a fixed tag-seeded projection.  Silence maps to the
    projection bias in every hop, i.e. a constant sequence.
    """

    modality = "audio"
    dim = 32
    bins = 64

    def __init__(self, tag):
        rng = _tag_rng(tag)
        self.w = rng.standard_normal((self.bins, self.dim)) / np.sqrt(self.bins)
        self.b = 0.1 * rng.standard_normal(self.dim)

    def encode_clip(self, samples, sample_rate, hop_hz):
        samples = np.asarray(samples, dtype=np.float64)
        hop = int(round(sample_rate / hop_hz))
        if hop < 1:
            raise MediaError(
                f"hop rate {hop_hz} Hz exceeds the sample rate {sample_rate} Hz"
            )
        count = samples.size // hop
        if count < 2:
            raise MediaError(
                f"clip too short: {count} hop(s) of {hop} samples "
                f"from {samples.size} total, need at least 2"
            )
        windows = samples[: count * hop].reshape(count, hop)
        spec = np.abs(np.fft.rfft(windows, axis=1))
        if spec.shape[1] >= self.bins:
            spec = spec[:, : self.bins]
        else:
            spec = np.pad(spec, ((0, 0), (0, self.bins - spec.shape[1])))
        return np.log1p(spec) @ self.w + self.b


register_encoder("patch-mean-v1", PatchMeanEncoder)
register_encoder("spectral-mean-v1", SpectralMeanEncoder)
