"""AdamW training loop for the velocity model.

Deterministic given the config seed: the model init and the data stream use
seeds derived from it, and every step draws, in fixed order, batch indices,
t values, noise, and the condition-dropout mask.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import (
    InvalidData,
    IoError,
    NumericalError,
    ShapeError,
    TrainingDiverged,
)
from .model import FlowArch, FlowModel
from .synth import DatasetItem

_CONFIG_KEYS = {
    "learning_rate",
    "beta1",
    "beta2",
    "eps",
    "weight_decay",
    "condition_dropout",
    "steps",
    "batch_size",
    "seed",
}


@dataclass(frozen=True)
class TrainConfig:
    steps: int
    batch_size: int
    seed: int
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    condition_dropout: float = 0.10

    def __post_init__(self):
        if int(self.steps) < 1:
            raise InvalidData("steps must be >= 1")
        if int(self.batch_size) < 1:
            raise InvalidData("batch_size must be >= 1")
        if not 0.0 <= float(self.condition_dropout) <= 1.0:
            raise InvalidData("condition_dropout must be in [0, 1]")
        if float(self.learning_rate) <= 0.0:
            raise InvalidData("learning_rate must be > 0")
        for name in ("beta1", "beta2"):
            if not 0.0 <= float(getattr(self, name)) < 1.0:
                raise InvalidData(f"{name} must be in [0, 1)")
        if float(self.eps) <= 0.0:
            raise InvalidData("eps must be > 0")
        if float(self.weight_decay) < 0.0:
            raise InvalidData("weight_decay must be >= 0")

    def to_json(self, path) -> None:
        try:
            fh = open(path, "w")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
        with fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise IoError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidData(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise InvalidData(f"{path}: train config must be a JSON object")
        unknown = sorted(set(doc) - _CONFIG_KEYS)
        if unknown:
            raise InvalidData(f"{path}: unknown train config keys: {', '.join(unknown)}")
        missing = sorted(k for k in ("steps", "batch_size", "seed") if k not in doc)
        if missing:
            raise InvalidData(f"{path}: missing train config keys: {', '.join(missing)}")
        return cls(**doc)


class TrainResult(NamedTuple):
    model: FlowModel
    loss_trace: np.ndarray


class AdamW:
    """Decoupled weight decay Adam (bias-corrected moments)."""

    def __init__(self, params: dict[str, np.ndarray], cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1**self.t
        bc2 = 1.0 - c.beta2**self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * (g * g)
            update = (m / bc1) / (np.sqrt(v / bc2) + c.eps)
            p -= c.learning_rate * (update + c.weight_decay * p)


def train(
    cfg: TrainConfig,
    dataset: Sequence[DatasetItem],
    arch: FlowArch | None = None,
) -> TrainResult:
    """Train a fresh model on the dataset; returns it with the loss trace."""
    if arch is None:
        arch = FlowArch()
    if len(dataset) < 1:
        raise InvalidData("dataset must hold at least one item")
    d, l = arch.channels, arch.length
    for i, item in enumerate(dataset):
        if item.x0.shape != (d, l):
            raise ShapeError(f"dataset item {i}: x0 shape {item.x0.shape} != ({d}, {l})")
        if item.curve.shape != (l,):
            raise ShapeError(f"dataset item {i}: curve shape {item.curve.shape} != ({l},)")
        if not 0 <= int(item.class_id) < arch.class_count:
            raise InvalidData(
                f"dataset item {i}: class_id {item.class_id} outside [0, {arch.class_count})"
            )

    x0_all = np.stack([item.x0 for item in dataset])
    curves_all = np.stack([item.curve for item in dataset])
    cls_all = np.array([int(item.class_id) for item in dataset])

    model = FlowModel.initialize(arch, cfg.seed)
    opt = AdamW(model.params, cfg)
    rng = np.random.default_rng([int(cfg.seed), 0x7A])
    n = len(dataset)
    trace = np.empty(cfg.steps)

    for step in range(cfg.steps):
        idx = rng.integers(0, n, size=cfg.batch_size)
        t = rng.random(cfg.batch_size)
        eps = rng.standard_normal((cfg.batch_size, d, l))
        drop = rng.random(cfg.batch_size) < cfg.condition_dropout

        curves_b = curves_all[idx].copy()
        cls_b = cls_all[idx].copy()
        curves_b[drop] = 0.0
        cls_b[drop] = arch.null_class

        try:
            loss, grads = model.loss_and_grads(x0_all[idx], eps, t, curves_b, cls_b)
        except NumericalError as exc:
            raise TrainingDiverged(
                f"loss became non-finite at step {step}"
            ) from exc
        if not np.isfinite(loss):
            raise TrainingDiverged(f"loss became non-finite at step {step}")
        opt.step(model.params, grads)
        trace[step] = loss

    if not all(np.isfinite(p).all() for p in model.params.values()):
        raise TrainingDiverged("parameters became non-finite")
    return TrainResult(model=model, loss_trace=trace)
