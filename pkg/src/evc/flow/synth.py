"""Synthetic paired data for desk-scale flow experiments.

Each item couples a sparse-impulse event curve with a latent whose
per-timestep RMS envelope is an affine map of that curve:

    env = ENV_OFFSET + ENV_GAIN * curve
    u[:, j] = normalize_rms(w + DIR_NOISE * (M_class @ g[:, j]))
    x0[:, j] = env[j] * u[:, j]

with g standard normal, w a fixed unit-RMS direction shared by all items,
and M_class a fixed orthogonal per-class mixing of the fluctuation part.
The per-timestep normalization makes the envelope of every item exactly
env; the shared direction keeps the conditional mean affine in the curve,
so a small velocity model can actually learn the coupling; the class-mixed
fluctuations make the channel distribution class-dependent without touching
the envelope.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..curves import hann_smooth, standardize
from ..errors import InvalidData

ENV_OFFSET = 1.0
ENV_GAIN = 0.5
DIR_NOISE = 0.2
_MIX_SEED = 0x5EED


class DatasetItem(NamedTuple):
    x0: np.ndarray       # (d, l)
    curve: np.ndarray    # (l,)
    class_id: int


def base_direction(d: int) -> np.ndarray:
    """Fixed unit-RMS channel direction shared across items and classes."""
    rng = np.random.default_rng([_MIX_SEED, 0xD1, int(d)])
    w = rng.standard_normal(d)
    return w / np.sqrt((w * w).mean())


def class_mixing(class_id: int, d: int) -> np.ndarray:
    """Fixed orthogonal d x d mixing matrix for a class (sign-normalized QR)."""
    rng = np.random.default_rng([_MIX_SEED, int(class_id), int(d)])
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def impulse_curve(rng: np.random.Generator, l: int, kernel: int = 9) -> np.ndarray:
    """Standardized Hann-smoothed curve with 2-6 random impulses."""
    count = int(rng.integers(2, 7))
    positions = rng.choice(l, size=count, replace=False)
    amplitudes = rng.uniform(0.5, 1.5, size=count)
    base = np.zeros(l)
    base[positions] = amplitudes
    curve, degenerate = standardize(hann_smooth(base, kernel))
    if degenerate:
        raise InvalidData("impulse curve collapsed to zero variance")
    return curve


def latent_from_curve(
    curve: np.ndarray,
    class_id: int,
    d: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Latent whose per-timestep RMS envelope equals ENV_OFFSET + ENV_GAIN * curve."""
    curve = np.asarray(curve, dtype=np.float64).reshape(-1)
    env = ENV_OFFSET + ENV_GAIN * curve
    if (env <= 0.0).any():
        raise InvalidData("curve too extreme: envelope must stay positive")
    g = rng.standard_normal((d, curve.size))
    u = base_direction(d)[:, None] + DIR_NOISE * (class_mixing(class_id, d) @ g)
    u /= np.sqrt((u * u).mean(axis=0, keepdims=True))
    return u * env[None, :]


def synth_dataset(
    seed: int,
    n: int,
    d: int = 8,
    l: int = 64,
    class_count: int = 4,
) -> list[DatasetItem]:
    """Deterministic list of n (x0, curve, class_id) items for a given seed."""
    if n < 1:
        raise InvalidData("dataset size must be >= 1")
    rng = np.random.default_rng([int(seed), 0x0D5])
    items = []
    for _ in range(n):
        curve = impulse_curve(rng, l)
        class_id = int(rng.integers(0, class_count))
        x0 = latent_from_curve(curve, class_id, d, rng)
        items.append(DatasetItem(x0=x0, curve=curve, class_id=class_id))
    return items
