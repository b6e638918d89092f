import time

import numpy as np
import pytest

from evc.features import FeatureSequence
from evc.flow import (
    FlowArch,
    FlowModel,
    SampleConfig,
    TrainConfig,
    impulse_curve,
    synth_dataset,
    train,
)

# The fixed-seed reference run. Trained once per session and shared by the
# training tests and the acceptance suite; ~20 s on one core.
REFERENCE_DATA_SEED = 2024
REFERENCE_DATA_SIZE = 512
REFERENCE_TRAIN = dict(steps=2000, batch_size=256, seed=31415, learning_rate=2e-3)
REFERENCE_SAMPLE = dict(seed=2718, steps=96, cfg_scale=2.0, class_id=0)
HELD_OUT_SEED = 777
HELD_OUT_COUNT = 32


@pytest.fixture(scope="session")
def reference_dataset():
    return synth_dataset(REFERENCE_DATA_SEED, REFERENCE_DATA_SIZE, d=8, l=64)


@pytest.fixture(scope="session")
def reference_train_seconds():
    """Mutable holder so the acceptance suite can see the training wall time."""
    return {}


@pytest.fixture(scope="session")
def reference_run(reference_dataset, reference_train_seconds):
    start = time.perf_counter()
    result = train(TrainConfig(**REFERENCE_TRAIN), reference_dataset)
    reference_train_seconds["train"] = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def held_out_curves():
    return [
        impulse_curve(np.random.default_rng([HELD_OUT_SEED, i]), 64)
        for i in range(HELD_OUT_COUNT)
    ]


@pytest.fixture(scope="session")
def reference_sample_config():
    return SampleConfig(**REFERENCE_SAMPLE)


@pytest.fixture(scope="session")
def untrained_model():
    return FlowModel.initialize(FlowArch(), seed=REFERENCE_TRAIN["seed"])


def make_step_features(l_f=120, d_f=6, rate_hz=30.0, step_at=80):
    """Features constant at vector A before step_at and at B from step_at on.

    The only nonzero consecutive dissimilarity is at index step_at - 1.
    """
    rng = np.random.default_rng(404)
    a = rng.standard_normal(d_f)
    b = rng.standard_normal(d_f)
    data = np.tile(a, (l_f, 1))
    data[step_at:] = b
    return FeatureSequence(data=data, rate_hz=rate_hz, source_tag="step-fixture")


@pytest.fixture
def step_features():
    return make_step_features()
