import numpy as np
import pytest

from evc.errors import InvalidData, NumericalError, ShapeError
from evc.flow import (
    FlowArch,
    FlowModel,
    concat_condition,
    flow_loss,
    interpolate_path,
    timestep_embedding,
)

SMALL = FlowArch(channels=4, length=12, hidden1=24, hidden2=24,
                 t_emb_dim=8, class_emb_dim=8, class_count=3)


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1.0)


def make_batch(arch, rng, batch=3, null_mix=True):
    x0 = rng.standard_normal((batch, arch.channels, arch.length))
    eps = rng.standard_normal((batch, arch.channels, arch.length))
    t = rng.uniform(0.0, 1.0, size=batch)
    curves = rng.standard_normal((batch, arch.length))
    ids = rng.integers(0, arch.class_count, size=batch)
    if null_mix and batch > 1:
        curves[0] = 0.0
        ids[0] = arch.null_class
    return x0, eps, t, curves, ids


# --- arch ---

def test_arch_dims():
    arch = FlowArch()
    assert arch.channels == 8 and arch.length == 64
    assert arch.hidden1 == 128 and arch.hidden2 == 128
    assert arch.null_class == arch.class_count
    assert arch.input_dim == (8 + 1) * 64 + 16 + 16
    assert arch.output_dim == 8 * 64
    with pytest.raises(InvalidData):
        FlowArch(t_emb_dim=7)  # sin/cos pairs need an even dim


def test_param_count():
    model = FlowModel.initialize(SMALL, seed=0)
    n = SMALL.input_dim * 24 + 24 + 24 * 24 + 24 + SMALL.output_dim * 24 \
        + SMALL.output_dim + (SMALL.class_count + 1) * SMALL.class_emb_dim
    assert model.param_count == n


# --- building blocks ---

def test_concat_condition():
    x = np.ones((2, 5))
    curve = np.arange(5.0)
    got = concat_condition(x, curve)
    assert got.shape == (3, 5)
    np.testing.assert_array_equal(got[2], curve)
    np.testing.assert_array_equal(concat_condition(x, None)[2], np.zeros(5))
    with pytest.raises(ShapeError):
        concat_condition(x, np.arange(4.0))
    with pytest.raises(ShapeError):
        concat_condition(np.ones(5), curve)


def test_interpolate_path():
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal((3, 4))
    eps = rng.standard_normal((3, 4))
    np.testing.assert_array_equal(interpolate_path(x0, eps, 0.0), x0)
    np.testing.assert_array_equal(interpolate_path(x0, eps, 1.0), eps)
    mid = interpolate_path(x0, eps, 0.25)
    np.testing.assert_allclose(mid, 0.25 * eps + 0.75 * x0, atol=1e-15)
    with pytest.raises(InvalidData):
        interpolate_path(x0, eps, 1.5)
    with pytest.raises(ShapeError):
        interpolate_path(x0, eps[:2], 0.5)


def test_timestep_embedding_formula():
    t = np.array([0.0, 0.3, 1.0])
    dim = 8
    emb = timestep_embedding(t, dim)
    assert emb.shape == (3, dim)
    freqs = np.exp(np.linspace(np.log(1.0), np.log(100.0), dim // 2))
    np.testing.assert_allclose(emb[:, : dim // 2], np.sin(t[:, None] * freqs),
                               atol=1e-15)
    np.testing.assert_allclose(emb[:, dim // 2:], np.cos(t[:, None] * freqs),
                               atol=1e-15)
    # t=0 row is all zeros then all ones
    np.testing.assert_array_equal(emb[0], np.r_[np.zeros(4), np.ones(4)])


# --- forward oracle ---

def forward_oracle(model, x0, eps, t, curves, ids):
    """Independent recomputation of the batch loss with explicit loops."""
    arch = model.arch
    p = model.params
    total = 0.0
    for i in range(x0.shape[0]):
        x_t = t[i] * eps[i] + (1.0 - t[i]) * x0[i]
        x_tilde = np.concatenate([x_t, curves[i][None, :]], axis=0).reshape(-1)
        temb = timestep_embedding(np.array([t[i]]), arch.t_emb_dim)[0]
        h0 = np.concatenate([x_tilde, temb, p["emb"][ids[i]]])
        a1 = np.tanh(p["w1"] @ h0 + p["b1"])
        a2 = np.tanh(p["w2"] @ a1 + p["b2"])
        out = p["w3"] @ a2 + p["b3"]
        resid = out - (eps[i] - x0[i]).reshape(-1)
        total += float(resid @ resid)
    return total / x0.shape[0]


def test_loss_matches_forward_oracle():
    rng = np.random.default_rng(21)
    model = FlowModel.initialize(SMALL, seed=5)
    for _ in range(5):
        x0, eps, t, curves, ids = make_batch(SMALL, rng, batch=4)
        loss, _ = model.loss_and_grads(x0, eps, t, curves, ids)
        assert rel_err(loss, forward_oracle(model, x0, eps, t, curves, ids)) < 1e-12


def test_flow_loss_single_sample():
    rng = np.random.default_rng(22)
    model = FlowModel.initialize(SMALL, seed=5)
    x0, eps, t, curves, ids = make_batch(SMALL, rng, batch=1, null_mix=False)
    loss, grads = flow_loss(model, x0[0], eps[0], float(t[0]), curves[0], int(ids[0]))
    ref, _ = model.loss_and_grads(x0, eps, t, curves, ids)
    assert loss == ref
    assert set(grads) == set(model.params)


# --- gradients ---

def grad_check(model, batches, h=1e-5):
    worst = 0.0
    rng = np.random.default_rng(23)
    for _ in range(batches):
        x0, eps, t, curves, ids = make_batch(model.arch, rng, batch=3)
        _, grads = model.loss_and_grads(x0, eps, t, curves, ids)
        for name, p in model.params.items():
            flat = p.reshape(-1)
            gflat = grads[name].reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + h
                lp, _ = model.loss_and_grads(x0, eps, t, curves, ids)
                flat[k] = orig - h
                lm, _ = model.loss_and_grads(x0, eps, t, curves, ids)
                flat[k] = orig
                fd = (lp - lm) / (2.0 * h)
                worst = max(worst, rel_err(gflat[k], fd))
    return worst


def test_gradients_small_arch():
    model = FlowModel.initialize(SMALL, seed=9)
    assert grad_check(model, batches=2) < 1e-6


def test_gradients_default_arch_spot_check():
    # full finite differences at the default width would take minutes; check a
    # random subset of coordinates in every tensor instead
    model = FlowModel.initialize(FlowArch(), seed=9)
    rng = np.random.default_rng(24)
    x0, eps, t, curves, ids = make_batch(model.arch, rng, batch=2)
    _, grads = model.loss_and_grads(x0, eps, t, curves, ids)
    h = 1e-5
    worst = 0.0
    for name, p in model.params.items():
        flat = p.reshape(-1)
        gflat = grads[name].reshape(-1)
        for k in rng.choice(flat.size, size=min(20, flat.size), replace=False):
            orig = flat[k]
            flat[k] = orig + h
            lp, _ = model.loss_and_grads(x0, eps, t, curves, ids)
            flat[k] = orig - h
            lm, _ = model.loss_and_grads(x0, eps, t, curves, ids)
            flat[k] = orig
            worst = max(worst, rel_err(gflat[k], (lp - lm) / (2.0 * h)))
    assert worst < 1e-6


# --- velocity ---

def test_velocity_shape_and_null_class():
    model = FlowModel.initialize(SMALL, seed=3)
    rng = np.random.default_rng(25)
    x = rng.standard_normal((SMALL.channels, SMALL.length))
    curve = rng.standard_normal(SMALL.length)
    v = model.velocity(x, curve, 0, 0.5)
    assert v.shape == (SMALL.channels, SMALL.length)
    # class_id=None uses the null embedding row
    v_none = model.velocity(x, curve, None, 0.5)
    v_null = model.velocity(x, curve, SMALL.null_class, 0.5)
    np.testing.assert_array_equal(v_none, v_null)
    with pytest.raises(ShapeError):
        model.velocity(x[:, :-1], curve, 0, 0.5)
    with pytest.raises(InvalidData):
        model.velocity(x, curve, SMALL.null_class + 1, 0.5)


def test_velocity_non_finite_params():
    model = FlowModel.initialize(SMALL, seed=3)
    model.params["b3"][0] = np.inf
    x = np.zeros((SMALL.channels, SMALL.length))
    with pytest.raises(NumericalError):
        model.velocity(x, None, None, 0.5)


def test_batch_shape_errors():
    model = FlowModel.initialize(SMALL, seed=3)
    rng = np.random.default_rng(26)
    x0, eps, t, curves, ids = make_batch(SMALL, rng, batch=3)
    with pytest.raises(ShapeError):
        model.loss_and_grads(x0[:, :, :-1], eps[:, :, :-1], t, curves, ids)
    with pytest.raises(ShapeError):
        model.loss_and_grads(x0, eps[:2], t, curves, ids)
    with pytest.raises(ShapeError):
        model.loss_and_grads(x0, eps, t, curves[:, :-1], ids)
    with pytest.raises(InvalidData):
        model.loss_and_grads(x0, eps, t + 2.0, curves, ids)


def test_initialize_deterministic():
    a = FlowModel.initialize(SMALL, seed=77)
    b = FlowModel.initialize(SMALL, seed=77)
    for name in a.params:
        np.testing.assert_array_equal(a.params[name], b.params[name])
    c = FlowModel.initialize(SMALL, seed=78)
    assert any((a.params[n] != c.params[n]).any() for n in a.params)
