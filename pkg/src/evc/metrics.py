"""Synchrony and distribution metrics over event timelines and curves.

Timeline metrics: scene-cut hit ratio, beat coverage/hit scores with F1, and
tempo deviation. Distribution metrics: Gaussian fits over curve collections,
the Frechet distance between fits, and conditional variants for paired
curves.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .curves import EventTimeline
from .errors import (
    InsufficientBeats,
    InvalidData,
    NoCuts,
    NumericalError,
    PairingError,
    ShapeError,
)

FD_MODES = ("M", "M+V", "M-V", "M|V")

_MODE_ALIASES = {
    "M": "M",
    "M_plus_V": "M+V",
    "M+V": "M+V",
    "M_minus_V": "M-V",
    "M-V": "M-V",
    "M_given_V": "M|V",
    "M|V": "M|V",
}


def _times(timeline: EventTimeline | np.ndarray) -> np.ndarray:
    return np.asarray(getattr(timeline, "times_s", timeline), dtype=np.float64).reshape(-1)


def scene_cut_hit(
    cuts: EventTimeline,
    onsets: EventTimeline,
    tolerance_s: float = 0.1,
) -> float:
    """Fraction of cuts with at least one onset within the tolerance."""
    if not np.isfinite(tolerance_s) or tolerance_s < 0.0:
        raise InvalidData(f"tolerance_s must be finite and >= 0, got {tolerance_s!r}")
    cut_times = _times(cuts)
    onset_times = _times(onsets)
    if cut_times.size == 0:
        raise NoCuts("scene-cut hit ratio is undefined without cuts")
    if onset_times.size == 0:
        return 0.0
    hits = 0
    for c in cut_times:
        j = int(np.searchsorted(onset_times, c))
        best = math.inf
        if j < onset_times.size:
            best = abs(onset_times[j] - c)
        if j > 0:
            best = min(best, abs(c - onset_times[j - 1]))
        if best <= tolerance_s:
            hits += 1
    return hits / cut_times.size


class BeatScores(NamedTuple):
    bcs: float   # recall over motion beats
    bhs: float   # precision over music beats
    f1: float
    matched_count: int


def _greedy_matches(a: np.ndarray, b: np.ndarray, tol: float) -> int:
    """Maximum one-to-one matching count for |a_i - b_j| <= tol.

    Both inputs sorted. The time-ordered two-pointer greedy attains maximum
    cardinality on tolerance graphs: whenever the two earliest unmatched
    events are within tolerance, some maximum matching pairs them.
    """
    i = j = matched = 0
    while i < a.size and j < b.size:
        if abs(a[i] - b[j]) <= tol:
            matched += 1
            i += 1
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    return matched


def beat_scores(
    motion: EventTimeline,
    music: EventTimeline,
    tolerance_s: float = 0.2,
) -> BeatScores:
    """Coverage (recall over motion), hit rate (precision over music), F1."""
    if not np.isfinite(tolerance_s) or tolerance_s < 0.0:
        raise InvalidData(f"tolerance_s must be finite and >= 0, got {tolerance_s!r}")
    a = _times(motion)
    b = _times(music)
    if a.size == 0 or b.size == 0:
        warnings.warn("empty beat timeline: scores are zero", stacklevel=2)
        return BeatScores(bcs=0.0, bhs=0.0, f1=0.0, matched_count=0)
    matched = _greedy_matches(a, b, tolerance_s)
    bcs = matched / a.size
    bhs = matched / b.size
    f1 = 0.0 if bcs + bhs == 0.0 else 2.0 * bcs * bhs / (bcs + bhs)
    return BeatScores(bcs=bcs, bhs=bhs, f1=f1, matched_count=matched)


def temporal_deviation(motion: EventTimeline, music: EventTimeline) -> float:
    """Absolute tempo difference in BPM, tempo = 60 / median inter-event gap."""
    tempos = []
    for name, timeline in (("motion", motion), ("music", music)):
        times = _times(timeline)
        if times.size < 2:
            raise InsufficientBeats(
                f"{name} timeline needs >= 2 events for a tempo, got {times.size}"
            )
        tempos.append(60.0 / float(np.median(np.diff(times))))
    return abs(tempos[1] - tempos[0])


@dataclass(frozen=True)
class GaussianStats:
    """Mean and covariance of a curve collection (divisor N-1, regularized)."""

    mean: np.ndarray
    cov: np.ndarray
    sample_count: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise ShapeError(f"cov shape {cov.shape} != ({mean.size}, {mean.size})")
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise InvalidData("Gaussian stats must be finite")
        if int(self.sample_count) < 2:
            raise InvalidData("sample_count must be >= 2")
        asym = float(np.abs(cov - cov.T).max()) if cov.size else 0.0
        if asym > 1e-9:
            raise InvalidData(f"covariance asymmetry {asym:.3e} exceeds 1e-9")
        if float(np.linalg.eigvalsh((cov + cov.T) / 2.0).min()) < -1e-9:
            raise InvalidData("covariance has an eigenvalue below -1e-9")
        mean = mean.copy()
        cov = cov.copy()
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "sample_count", int(self.sample_count))

    @property
    def dim(self) -> int:
        return self.mean.size


def _as_matrix(curves: Sequence) -> np.ndarray:
    rows = []
    length = None
    for i, c in enumerate(curves):
        v = np.asarray(getattr(c, "values", c), dtype=np.float64).reshape(-1)
        if length is None:
            length = v.size
        elif v.size != length:
            raise ShapeError(f"curve {i} has length {v.size}, expected {length}")
        rows.append(v)
    return np.stack(rows)


def fit_gaussian(curves: Sequence, regularization: float = 1e-6) -> GaussianStats:
    """Sample mean/covariance of equal-length curves, plus reg * I."""
    if len(curves) < 2:
        raise InvalidData(f"need >= 2 curves to fit a Gaussian, got {len(curves)}")
    x = _as_matrix(curves)
    mean = x.mean(axis=0)
    dev = x - mean
    cov = dev.T @ dev / (x.shape[0] - 1)
    cov = (cov + cov.T) / 2.0 + regularization * np.eye(x.shape[1])
    return GaussianStats(mean=mean, cov=cov, sample_count=x.shape[0])


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition, eigenvalues clamped at 0."""
    sym = (mat + mat.T) / 2.0
    w, v = np.linalg.eigh(sym)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def frechet_distance(g1: GaussianStats, g2: GaussianStats) -> float:
    """Squared Frechet distance between two Gaussian fits.

    d^2 = |mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2), computed
    with symmetric eigendecompositions; tiny negative eigenvalues from
    rounding are clamped to zero. Returns the squared form, >= 0.
    """
    if g1.dim != g2.dim:
        raise ShapeError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    diff = g1.mean - g2.mean
    root = _sqrtm_psd(g1.cov)
    inner = root @ g2.cov @ root
    w = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    cross = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    d2 = float(diff @ diff) + float(np.trace(g1.cov) + np.trace(g2.cov)) - 2.0 * cross
    if not np.isfinite(d2):
        raise NumericalError("Frechet distance is non-finite")
    return max(d2, 0.0)


def conditional_gaussian(joint: GaussianStats, v: np.ndarray) -> GaussianStats:
    """Condition a joint Gaussian over [M; V] on V = v.

    The split is inferred from len(v): the last len(v) coordinates are V.
    Uses a Cholesky solve of Sigma_VV, adding 1e-6 * I once if the factor
    fails; a still-singular system raises NumericalError.
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    lv = v.size
    lm = joint.dim - lv
    if lv < 1 or lm < 1:
        raise ShapeError(
            f"conditioning vector of length {lv} leaves no M block in dim {joint.dim}"
        )
    if not np.isfinite(v).all():
        raise InvalidData("conditioning vector must be finite")

    mu_m = joint.mean[:lm]
    mu_v = joint.mean[lm:]
    s_mm = joint.cov[:lm, :lm]
    s_mv = joint.cov[:lm, lm:]
    s_vv = joint.cov[lm:, lm:]

    try:
        chol = np.linalg.cholesky(s_vv)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(s_vv + 1e-6 * np.eye(lv))
        except np.linalg.LinAlgError as exc:
            raise NumericalError("Sigma_VV is singular even after regularization") from exc
    # Sigma_VV^-1 (v - mu_v) and Sigma_VV^-1 Sigma_VM through the factor
    rhs = np.concatenate([(v - mu_v)[:, None], s_mv.T], axis=1)
    tmp = np.linalg.solve(chol, rhs)
    sol = np.linalg.solve(chol.T, tmp)
    gain = sol[:, 0]
    w = sol[:, 1:]

    mean = mu_m + s_mv @ gain
    cov = s_mm - s_mv @ w
    cov = (cov + cov.T) / 2.0
    try:
        return GaussianStats(mean=mean, cov=cov, sample_count=joint.sample_count)
    except InvalidData as exc:
        raise NumericalError(f"conditional covariance is not PSD: {exc}") from exc


class CurveFdResult(NamedTuple):
    mode: str
    value: float
    per_video: tuple


def curve_fd(
    gen_music: Sequence,
    gt_music: Sequence,
    video: Sequence,
    mode: str = "M",
) -> CurveFdResult:
    """Frechet distance between generated and reference music curves.

    Modes: "M" plain; "M+V" per-item concatenation with the paired video
    curve; "M-V" music fit vs video fit; "M|V" mean FD between the two
    conditionals across evaluation videos (exact pairwise summation).
    """
    mode_norm = _MODE_ALIASES.get(mode)
    if mode_norm is None:
        raise InvalidData(f"unknown mode {mode!r}; expected one of {FD_MODES}")

    if mode_norm == "M":
        return CurveFdResult(
            mode=mode_norm,
            value=frechet_distance(fit_gaussian(gen_music), fit_gaussian(gt_music)),
            per_video=(),
        )

    if mode_norm == "M-V":
        gm = fit_gaussian(gen_music)
        vm = fit_gaussian(video)
        return CurveFdResult(
            mode=mode_norm, value=frechet_distance(gm, vm), per_video=()
        )

    # paired modes
    if not (len(gen_music) == len(gt_music) == len(video)):
        raise PairingError(
            f"paired mode {mode_norm} needs equal counts, got "
            f"gen={len(gen_music)}, gt={len(gt_music)}, video={len(video)}"
        )
    gen_m = _as_matrix(gen_music)
    gt_m = _as_matrix(gt_music)
    vid_m = _as_matrix(video)

    if mode_norm == "M+V":
        gen_fit = fit_gaussian(np.concatenate([gen_m, vid_m], axis=1))
        gt_fit = fit_gaussian(np.concatenate([gt_m, vid_m], axis=1))
        return CurveFdResult(
            mode=mode_norm, value=frechet_distance(gen_fit, gt_fit), per_video=()
        )

    # M|V
    gen_joint = fit_gaussian(np.concatenate([gen_m, vid_m], axis=1))
    gt_joint = fit_gaussian(np.concatenate([gt_m, vid_m], axis=1))
    per_video = []
    for row in vid_m:
        per_video.append(
            frechet_distance(
                conditional_gaussian(gen_joint, row),
                conditional_gaussian(gt_joint, row),
            )
        )
    return CurveFdResult(
        mode=mode_norm,
        value=math.fsum(per_video) / len(per_video),
        per_video=tuple(per_video),
    )
