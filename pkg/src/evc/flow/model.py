"""Velocity model: a small tanh MLP with hand-written backprop.

The network predicts a velocity field for the straight interpolation path
x_t = t * eps + (1 - t) * x0. Input is the flattened conditioned latent
(d + 1 channels: the latent plus one curve channel), a sinusoidal embedding
of t, and a learned class embedding; output is the d x l velocity.

Gradients are computed by an explicit reverse pass in this module, float64
throughout, so finite-difference checks can be made tight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidData, NumericalError, ShapeError

PARAM_ORDER = ("w1", "b1", "w2", "b2", "w3", "b3", "emb")


@dataclass(frozen=True)
class FlowArch:
    """Architecture hyperparameters. null_class is the extra embedding row."""

    channels: int = 8
    length: int = 64
    hidden1: int = 128
    hidden2: int = 128
    t_emb_dim: int = 16
    class_emb_dim: int = 16
    class_count: int = 4

    def __post_init__(self):
        for name in ("channels", "length", "hidden1", "hidden2", "class_emb_dim", "class_count"):
            if int(getattr(self, name)) < 1:
                raise InvalidData(f"{name} must be >= 1")
        if self.t_emb_dim < 2 or self.t_emb_dim % 2 != 0:
            raise InvalidData("t_emb_dim must be even and >= 2")

    @property
    def null_class(self) -> int:
        return self.class_count

    @property
    def input_dim(self) -> int:
        return (self.channels + 1) * self.length + self.t_emb_dim + self.class_emb_dim

    @property
    def output_dim(self) -> int:
        return self.channels * self.length


def concat_condition(x: np.ndarray, curve: np.ndarray | None, length: int | None = None) -> np.ndarray:
    """Stack the curve as one extra channel under the latent.

    curve=None appends the all-zero null channel. Shapes are checked, never
    broadcast: x must be (d, l) and curve length l.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"latent must be 2-D (channels x length), got ndim={x.ndim}")
    l = x.shape[1] if length is None else length
    if x.shape[1] != l:
        raise ShapeError(f"latent length {x.shape[1]} != expected {l}")
    if curve is None:
        row = np.zeros((1, l))
    else:
        c = np.asarray(getattr(curve, "values", curve), dtype=np.float64).reshape(-1)
        if c.size != l:
            raise ShapeError(f"curve length {c.size} != latent length {l}")
        row = c[None, :]
    return np.concatenate([x, row], axis=0)


def interpolate_path(x0: np.ndarray, eps: np.ndarray, t: float) -> np.ndarray:
    """Straight path x_t = t * eps + (1 - t) * x0, exact at the endpoints."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ShapeError(f"x0 shape {x0.shape} != eps shape {eps.shape}")
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise InvalidData(f"t must be in [0, 1], got {t}")
    if t == 0.0:
        return x0.copy()
    if t == 1.0:
        return eps.copy()
    return t * eps + (1.0 - t) * x0


def timestep_embedding(t: np.ndarray, dim: int) -> np.ndarray:
    """Sinusoidal embedding of t in [0, 1]: (B, dim) of sin/cos pairs."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(np.linspace(np.log(1.0), np.log(100.0), half))
    angles = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


class FlowModel:
    """Two-hidden-layer tanh MLP over (flattened conditioned latent, t, class)."""

    def __init__(self, arch: FlowArch, params: dict[str, np.ndarray]):
        self.arch = arch
        expected = self._shapes(arch)
        for name in PARAM_ORDER:
            if name not in params:
                raise InvalidData(f"missing parameter {name!r}")
            if params[name].shape != expected[name]:
                raise ShapeError(
                    f"parameter {name!r} has shape {params[name].shape}, expected {expected[name]}"
                )
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    @staticmethod
    def _shapes(arch: FlowArch) -> dict[str, tuple]:
        return {
            "w1": (arch.hidden1, arch.input_dim),
            "b1": (arch.hidden1,),
            "w2": (arch.hidden2, arch.hidden1),
            "b2": (arch.hidden2,),
            "w3": (arch.output_dim, arch.hidden2),
            "b3": (arch.output_dim,),
            "emb": (arch.class_count + 1, arch.class_emb_dim),
        }

    @classmethod
    def initialize(cls, arch: FlowArch, seed: int) -> "FlowModel":
        """Seeded Gaussian init, scaled by 1/sqrt(fan_in); zero biases."""
        rng = np.random.default_rng([int(seed), 0x11])
        shapes = cls._shapes(arch)
        params = {
            "w1": rng.standard_normal(shapes["w1"]) / np.sqrt(arch.input_dim),
            "b1": np.zeros(shapes["b1"]),
            "w2": rng.standard_normal(shapes["w2"]) / np.sqrt(arch.hidden1),
            "b2": np.zeros(shapes["b2"]),
            "w3": rng.standard_normal(shapes["w3"]) / np.sqrt(arch.hidden2),
            "b3": np.zeros(shapes["b3"]),
            "emb": 0.1 * rng.standard_normal(shapes["emb"]),
        }
        return cls(arch, params)

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def _class_rows(self, class_ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(class_ids)
        if ids.ndim != 1:
            raise ShapeError("class ids must be 1-D")
        if (ids < 0).any() or (ids > self.arch.null_class).any():
            raise InvalidData(
                f"class ids must be in [0, {self.arch.null_class}] "
                f"({self.arch.null_class} is the null id)"
            )
        return ids.astype(np.intp)

    def _forward(self, x_flat: np.ndarray, t: np.ndarray, class_ids: np.ndarray):
        """Batched forward pass. Returns (out, cache for backward)."""
        p = self.params
        ids = self._class_rows(class_ids)
        temb = timestep_embedding(t, self.arch.t_emb_dim)
        h0 = np.concatenate([x_flat, temb, p["emb"][ids]], axis=1)
        a1 = np.tanh(h0 @ p["w1"].T + p["b1"])
        a2 = np.tanh(a1 @ p["w2"].T + p["b2"])
        out = a2 @ p["w3"].T + p["b3"]
        return out, (h0, a1, a2, ids)

    def velocity(
        self,
        x: np.ndarray,
        curve: np.ndarray | None,
        class_id: int | None,
        t: float,
    ) -> np.ndarray:
        """Predicted velocity for one latent. class_id=None means the null id."""
        arch = self.arch
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (arch.channels, arch.length):
            raise ShapeError(
                f"latent shape {x.shape} != ({arch.channels}, {arch.length})"
            )
        cid = arch.null_class if class_id is None else int(class_id)
        x_tilde = concat_condition(x, curve, arch.length)
        out, _ = self._forward(
            x_tilde.reshape(1, -1), np.array([float(t)]), np.array([cid])
        )
        if not np.isfinite(out).all():
            raise NumericalError("velocity output is non-finite")
        return out.reshape(arch.channels, arch.length)

    def loss_and_grads(
        self,
        x0: np.ndarray,
        eps: np.ndarray,
        t: np.ndarray,
        curves: np.ndarray,
        class_ids: np.ndarray,
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Batch-mean velocity-matching loss and its parameter gradients.

        x0, eps: (B, d, l); t: (B,); curves: (B, l) with zero rows for the
        null condition; class_ids: (B,). The per-sample loss is the squared
        error between eps - x0 and the model output, summed over all d * l
        entries; the batch loss is the mean over samples.
        """
        arch = self.arch
        x0 = np.asarray(x0, dtype=np.float64)
        eps = np.asarray(eps, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64).reshape(-1)
        curves = np.asarray(curves, dtype=np.float64)
        batch = x0.shape[0] if x0.ndim == 3 else -1
        if x0.ndim != 3 or x0.shape[1:] != (arch.channels, arch.length):
            raise ShapeError(f"x0 must be (B, {arch.channels}, {arch.length}), got {x0.shape}")
        if eps.shape != x0.shape:
            raise ShapeError(f"eps shape {eps.shape} != x0 shape {x0.shape}")
        if curves.shape != (batch, arch.length):
            raise ShapeError(f"curves must be (B, {arch.length}), got {curves.shape}")
        if t.shape != (batch,):
            raise ShapeError(f"t must be (B,), got {t.shape}")
        if ((t < 0.0) | (t > 1.0)).any():
            raise InvalidData("t values must be in [0, 1]")

        x_t = t[:, None, None] * eps + (1.0 - t[:, None, None]) * x0
        x_tilde = np.concatenate([x_t, curves[:, None, :]], axis=1)
        x_flat = x_tilde.reshape(batch, -1)
        target = (eps - x0).reshape(batch, -1)

        out, (h0, a1, a2, ids) = self._forward(x_flat, t, class_ids)
        resid = out - target
        loss = float((resid * resid).sum() / batch)
        if not np.isfinite(loss):
            raise NumericalError("loss is non-finite")

        p = self.params
        dout = (2.0 / batch) * resid
        grads = {
            "w3": dout.T @ a2,
            "b3": dout.sum(axis=0),
        }
        da2 = dout @ p["w3"]
        dz2 = da2 * (1.0 - a2 * a2)
        grads["w2"] = dz2.T @ a1
        grads["b2"] = dz2.sum(axis=0)
        da1 = dz2 @ p["w2"]
        dz1 = da1 * (1.0 - a1 * a1)
        grads["w1"] = dz1.T @ h0
        grads["b1"] = dz1.sum(axis=0)
        dh0 = dz1 @ p["w1"]
        demb_rows = dh0[:, -self.arch.class_emb_dim:]
        grads["emb"] = np.zeros_like(p["emb"])
        np.add.at(grads["emb"], ids, demb_rows)
        return loss, grads


def flow_loss(
    model: FlowModel,
    x0: np.ndarray,
    eps: np.ndarray,
    t: float,
    curve: np.ndarray | None,
    class_id: int | None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Single-sample loss (summed over the d*l entries) and gradients."""
    arch = model.arch
    curve_row = (
        np.zeros((1, arch.length))
        if curve is None
        else np.asarray(getattr(curve, "values", curve), dtype=np.float64).reshape(1, -1)
    )
    cid = arch.null_class if class_id is None else int(class_id)
    return model.loss_and_grads(
        np.asarray(x0, dtype=np.float64)[None],
        np.asarray(eps, dtype=np.float64)[None],
        np.array([float(t)]),
        curve_row,
        np.array([cid]),
    )
