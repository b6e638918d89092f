"""Event curves: frame-to-frame change profiles of a feature sequence.

The pipeline turns any feature sequence into a fixed-length curve that spikes
where consecutive frames disagree:

    dissimilarity -> standardize -> resample to L -> Hann smooth (size K)

All stages are float64 and deterministic. A flat input (zero variance in the
dissimilarity series) produces the all-zero curve with ``degenerate=True``
rather than an error, so static inputs still flow through downstream stages.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidData,
    InvalidKernel,
    IoError,
    NoValidWindows,
    ShapeError,
    ZeroNormFrame,
)
from .features import FeatureSequence

DEFAULT_LENGTH = 394
DEFAULT_KERNEL = 31

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class CurveConfig:
    """Pipeline parameters. Resampling and the degenerate policy are fixed."""

    target_length: int = DEFAULT_LENGTH
    kernel_size: int = DEFAULT_KERNEL
    resample_method: str = "linear"
    degenerate_policy: str = "zero-curve-with-flag"

    def __post_init__(self):
        if int(self.target_length) < 2:
            raise InvalidData(f"target_length must be >= 2, got {self.target_length}")
        k = int(self.kernel_size)
        if k < 1 or k % 2 == 0:
            raise InvalidKernel(f"kernel_size must be odd and >= 1, got {k}")
        if self.resample_method != "linear":
            raise InvalidData(f"unsupported resample_method {self.resample_method!r}")
        if self.degenerate_policy != "zero-curve-with-flag":
            raise InvalidData(f"unsupported degenerate_policy {self.degenerate_policy!r}")
        object.__setattr__(self, "target_length", int(self.target_length))
        object.__setattr__(self, "kernel_size", k)


@dataclass(frozen=True)
class EventCurve:
    """A length-L curve spanning duration_s seconds.

    Sample i sits at time i / (L - 1) * duration_s. ``standardized`` records
    whether the values went through the zero-mean/unit-variance stage;
    ``degenerate`` marks the all-zero curve produced from a flat input.
    """

    values: np.ndarray
    duration_s: float
    pipeline: CurveConfig | None = None
    standardized: bool = False
    degenerate: bool = False

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise InvalidData(f"curve values must be 1-D, got ndim={arr.ndim}")
        if arr.size < 2:
            raise InvalidData(f"curve needs at least 2 samples, got {arr.size}")
        if not np.isfinite(arr).all():
            raise InvalidData("curve values must be finite")
        dur = float(self.duration_s)
        if not np.isfinite(dur) or dur <= 0.0:
            raise InvalidData(f"duration_s must be finite and > 0, got {dur!r}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "duration_s", dur)

    @property
    def length(self) -> int:
        return self.values.size

    def times(self) -> np.ndarray:
        """Sample times in seconds, index i at i / (L - 1) * duration_s."""
        n = self.values.size
        return np.arange(n, dtype=np.float64) / (n - 1) * self.duration_s


@dataclass(frozen=True)
class EventTimeline:
    """Strictly increasing event times (seconds) inside a clip span."""

    times_s: np.ndarray
    span_s: float
    label: str = "other"

    def __post_init__(self):
        arr = np.asarray(self.times_s, dtype=np.float64).reshape(-1)
        span = float(self.span_s)
        if not np.isfinite(span) or span <= 0.0:
            raise InvalidData(f"span_s must be finite and > 0, got {span!r}")
        if arr.size:
            if not np.isfinite(arr).all():
                raise InvalidData("event times must be finite")
            if (arr < 0.0).any() or (arr > span).any():
                raise InvalidData("event times must lie in [0, span_s]")
            if arr.size > 1 and not (np.diff(arr) > 0.0).all():
                raise InvalidData("event times must be strictly increasing")
        if not isinstance(self.label, str) or not self.label:
            raise InvalidData("label must be a non-empty string")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "times_s", arr)
        object.__setattr__(self, "span_s", span)

    def __len__(self) -> int:
        return self.times_s.size


def consecutive_dissimilarity(seq: FeatureSequence) -> np.ndarray:
    """Cosine dissimilarity 1 - cos(f_k, f_{k+1}) for every consecutive pair.

    Returns l_f - 1 values in [0, 2]. Any zero-norm frame makes the cosine
    undefined and raises ZeroNormFrame.
    """
    frames = seq.data
    norms = np.linalg.norm(frames, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroNormFrame(f"frame {zero[0]} has zero norm")
    dots = np.einsum("ij,ij->i", frames[:-1], frames[1:])
    cos = dots / (norms[:-1] * norms[1:])
    np.clip(cos, -1.0, 1.0, out=cos)
    return 1.0 - cos


def standardize(series: np.ndarray) -> tuple[np.ndarray, bool]:
    """Zero-mean, unit-variance normalization with population sigma.

    Returns (standardized, degenerate). If sigma < 1e-12 the series is
    returned as all zeros with degenerate=True.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InvalidData("standardize expects a 1-D series of length >= 2")
    if not np.isfinite(x).all():
        raise InvalidData("standardize expects finite values")
    sigma = float(x.std())
    if sigma < STD_FLOOR:
        return np.zeros_like(x), True
    return (x - x.mean()) / sigma, False


def resample(series: np.ndarray, length: int) -> np.ndarray:
    """Linear resampling of [0, n-1] onto [0, length-1], endpoints exact."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InvalidData("resample expects a 1-D series of length >= 2")
    if length < 2:
        raise InvalidData(f"target length must be >= 2, got {length}")
    n = x.size
    if length == n:
        return x.copy()
    positions = np.linspace(0.0, float(n - 1), num=length)
    return np.interp(positions, np.arange(n, dtype=np.float64), x)


def hann_window(size: int) -> np.ndarray:
    """Symmetric Hann kernel, normalized to unit sum. size must be odd."""
    if size < 1 or size % 2 == 0:
        raise InvalidKernel(f"kernel size must be odd and >= 1, got {size}")
    if size == 1:
        return np.ones(1)
    n = np.arange(size, dtype=np.float64)
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * n / (size - 1)))
    return w / w.sum()


def hann_smooth(series: np.ndarray, kernel_size: int) -> np.ndarray:
    """Same-length smoothing with a unit-sum Hann kernel and reflect padding."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InvalidData("hann_smooth expects a 1-D series of length >= 2")
    w = hann_window(kernel_size)
    if kernel_size == 1:
        return x.copy()
    if kernel_size > 2 * x.size - 1:
        raise InvalidKernel(
            f"kernel size {kernel_size} too large for series of length {x.size}"
        )
    half = (kernel_size - 1) // 2
    padded = np.pad(x, (half, half), mode="reflect")
    return np.convolve(padded, w, mode="valid")


def extract_event_curve(
    seq: FeatureSequence,
    cfg: CurveConfig | None = None,
    duration_s: float | None = None,
) -> EventCurve:
    """Run the full pipeline on a feature sequence.

    duration_s defaults to the feature-grid span l_f / rate_hz; pass the clip
    duration explicitly when the grid does not cover the whole clip.
    """
    if cfg is None:
        cfg = CurveConfig()
    dur = seq.duration_s if duration_s is None else float(duration_s)
    if not np.isfinite(dur) or dur <= 0.0:
        raise InvalidData(f"duration_s must be finite and > 0, got {dur!r}")

    dissim = consecutive_dissimilarity(seq)
    if dissim.size < 2:
        # a single consecutive pair has no variance to standardize
        std_series, degenerate = np.zeros(1), True
    else:
        std_series, degenerate = standardize(dissim)
    if degenerate:
        values = np.zeros(cfg.target_length)
    else:
        values = hann_smooth(resample(std_series, cfg.target_length), cfg.kernel_size)
    return EventCurve(
        values=values,
        duration_s=dur,
        pipeline=cfg,
        standardized=True,
        degenerate=degenerate,
    )


def pick_peaks(
    curve: EventCurve,
    threshold: float,
    min_separation_s: float = 0.0,
    label: str = "peaks",
) -> EventTimeline:
    """Greedy peak picking on a curve.

    Candidates are strict interior local maxima with value >= threshold. They
    are kept in descending value order (ties toward the earlier index) subject
    to pairwise time separation >= min_separation_s.
    """
    if min_separation_s < 0.0:
        raise InvalidData("min_separation_s must be >= 0")
    x = curve.values
    interior = np.arange(1, x.size - 1)
    is_max = (x[interior] > x[interior - 1]) & (x[interior] > x[interior + 1])
    candidates = interior[is_max & (x[interior] >= threshold)]
    order = sorted(candidates, key=lambda i: (-x[i], i))
    times = curve.times()
    kept: list[int] = []
    for i in order:
        if all(abs(times[i] - times[j]) >= min_separation_s for j in kept):
            kept.append(i)
    kept.sort()
    return EventTimeline(
        times_s=times[kept], span_s=curve.duration_s, label=label
    )


@dataclass(frozen=True)
class CorrelationResult:
    """Per-anchor Pearson correlations between two curves.

    values[i] is None where the window around anchors[i] was skipped (fewer
    than 3 samples or a zero-variance segment). mean averages the computed
    entries only.
    """

    anchors_s: tuple
    values: tuple
    mean: float
    used: int
    skipped: int


def windowed_correlation(
    a: EventCurve,
    b: EventCurve,
    anchors: EventTimeline,
    window_s: float,
) -> CorrelationResult:
    """Pearson correlation of two curves inside windows centered on anchors."""
    if a.length != b.length:
        raise ShapeError(f"curve lengths differ: {a.length} vs {b.length}")
    if a.duration_s != b.duration_s:
        raise ShapeError(
            f"curve durations differ: {a.duration_s} vs {b.duration_s}"
        )
    if not np.isfinite(window_s) or window_s <= 0.0:
        raise InvalidData(f"window_s must be finite and > 0, got {window_s!r}")
    if len(anchors) == 0:
        raise InvalidData("need at least one anchor")

    times = a.times()
    half = window_s / 2.0
    va, vb = a.values, b.values
    out: list[float | None] = []
    for t in anchors.times_s:
        mask = (times >= t - half) & (times <= t + half)
        if int(mask.sum()) < 3:
            out.append(None)
            continue
        sa, sb = va[mask], vb[mask]
        da, db = sa - sa.mean(), sb - sb.mean()
        na, nb = float(np.sqrt((da * da).mean())), float(np.sqrt((db * db).mean()))
        if na < 1e-15 or nb < 1e-15:
            out.append(None)
            continue
        out.append(float((da * db).mean() / (na * nb)))
    computed = [v for v in out if v is not None]
    if not computed:
        raise NoValidWindows(
            f"all {len(out)} anchor windows were skipped (window_s={window_s})"
        )
    return CorrelationResult(
        anchors_s=tuple(float(t) for t in anchors.times_s),
        values=tuple(out),
        mean=math.fsum(computed) / len(computed),
        used=len(computed),
        skipped=len(out) - len(computed),
    )


# --- delimited formats ---

def write_curve_csv(curve: EventCurve, path) -> None:
    """Two-column CSV ``time_s,value`` with 9 significant digits."""
    n = curve.length
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    with fh:
        fh.write("time_s,value\n")
        for i in range(n):
            t = i / (n - 1) * curve.duration_s
            fh.write(f"{t:.9g},{curve.values[i]:.9g}\n")


def read_curve_csv(path) -> EventCurve:
    """Parse a curve CSV written by write_curve_csv.

    The duration is recovered from the last row's time. Pipeline flags are not
    stored in the CSV, so the result has pipeline=None and both flags False.
    """
    times: list[float] = []
    values: list[float] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["time_s", "value"]:
            raise InvalidData(f"{path}: expected header 'time_s,value'")
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise InvalidData(f"{path}: malformed row {row!r}")
            try:
                times.append(float(row[0]))
                values.append(float(row[1]))
            except ValueError as exc:
                raise InvalidData(f"{path}: non-numeric row {row!r}") from exc
    if len(values) < 2:
        raise InvalidData(f"{path}: curve CSV needs at least 2 samples")
    duration = times[-1]
    if not np.isfinite(duration) or duration <= 0.0:
        raise InvalidData(f"{path}: last sample time must be > 0, got {duration!r}")
    return EventCurve(values=np.array(values), duration_s=duration)


def write_timeline_json(timeline: EventTimeline, path) -> None:
    """Serialize an event timeline as JSON."""
    doc = {
        "unit": "seconds",
        "span_s": timeline.span_s,
        "label": timeline.label,
        "times": [float(t) for t in timeline.times_s],
    }
    try:
        fh = open(path, "w")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    with fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_timeline_json(path) -> EventTimeline:
    """Parse a timeline JSON written by write_timeline_json."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidData(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidData(f"{path}: timeline JSON must be an object")
    if doc.get("unit") != "seconds":
        raise InvalidData(f"{path}: timeline unit must be 'seconds'")
    for key in ("span_s", "label", "times"):
        if key not in doc:
            raise InvalidData(f"{path}: timeline JSON missing key {key!r}")
    times = doc["times"]
    if not isinstance(times, list):
        raise InvalidData(f"{path}: 'times' must be a list")
    return EventTimeline(
        times_s=np.array(times, dtype=np.float64),
        span_s=doc["span_s"],
        label=doc["label"],
    )
