"""Event curves from feature sequences, a conditional flow toy on top of
them, and synchrony metrics between event timelines."""

__version__ = "0.1.0"

from .curves import (
    CorrelationResult,
    CurveConfig,
    EventCurve,
    EventTimeline,
    consecutive_dissimilarity,
    extract_event_curve,
    hann_smooth,
    hann_window,
    pick_peaks,
    read_curve_csv,
    read_timeline_json,
    resample,
    standardize,
    windowed_correlation,
    write_curve_csv,
    write_timeline_json,
)
from .features import FeatureSequence, read_features, write_features
from .metrics import (
    BeatScores,
    CurveFdResult,
    GaussianStats,
    beat_scores,
    conditional_gaussian,
    curve_fd,
    fit_gaussian,
    frechet_distance,
    scene_cut_hit,
    temporal_deviation,
)
from .plotting import emit_plot

__all__ = [
    "BeatScores",
    "CorrelationResult",
    "CurveConfig",
    "CurveFdResult",
    "EventCurve",
    "EventTimeline",
    "FeatureSequence",
    "GaussianStats",
    "beat_scores",
    "conditional_gaussian",
    "consecutive_dissimilarity",
    "curve_fd",
    "emit_plot",
    "extract_event_curve",
    "fit_gaussian",
    "frechet_distance",
    "hann_smooth",
    "hann_window",
    "pick_peaks",
    "read_curve_csv",
    "read_features",
    "read_timeline_json",
    "resample",
    "scene_cut_hit",
    "standardize",
    "temporal_deviation",
    "windowed_correlation",
    "write_curve_csv",
    "write_features",
    "write_timeline_json",
]
