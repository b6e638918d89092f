"""Conditional rectified-flow toy: model, training, sampling, synthetic data."""

from .checkpoint import load_model, save_model
from .model import (
    FlowArch,
    FlowModel,
    concat_condition,
    flow_loss,
    interpolate_path,
    timestep_embedding,
)
from .sampling import (
    Latent,
    SampleConfig,
    SwapFidelityResult,
    rms_envelope,
    sample,
    swap_fidelity,
)
from .synth import (
    DIR_NOISE,
    ENV_GAIN,
    ENV_OFFSET,
    DatasetItem,
    base_direction,
    class_mixing,
    impulse_curve,
    latent_from_curve,
    synth_dataset,
)
from .training import AdamW, TrainConfig, TrainResult, train

__all__ = [
    "AdamW",
    "DIR_NOISE",
    "DatasetItem",
    "ENV_GAIN",
    "ENV_OFFSET",
    "FlowArch",
    "FlowModel",
    "Latent",
    "SampleConfig",
    "SwapFidelityResult",
    "TrainConfig",
    "TrainResult",
    "base_direction",
    "class_mixing",
    "concat_condition",
    "flow_loss",
    "impulse_curve",
    "interpolate_path",
    "latent_from_curve",
    "load_model",
    "rms_envelope",
    "sample",
    "save_model",
    "swap_fidelity",
    "synth_dataset",
    "timestep_embedding",
    "train",
]
