import itertools

import numpy as np
import pytest

from config import SamplerParams
from services.observation_store import Observation, ObservationStore
from tools.configspace import CategoricalParameter, ConfigurationSpace, ContinuousParameter, IntegerParameter


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ids():
    return itertools.count()


@pytest.fixture
def mixed_space():
    return ConfigurationSpace(parameters=[
        ContinuousParameter(name="lr", lower=1e-6, upper=1e-2, log=True),
        ContinuousParameter(name="dropout", lower=0.0, upper=0.5),
        IntegerParameter(name="batch", lower=8, upper=256, log=True),
        CategoricalParameter(name="opt", choices=["adam", "sgd", "rmsprop"]),
    ])


@pytest.fixture
def unit_cube():
    """Two continuous dims on [0, 1]."""
    return ConfigurationSpace(parameters=[
        ContinuousParameter(name="x0", lower=0.0, upper=1.0),
        ContinuousParameter(name="x1", lower=0.0, upper=1.0),
    ])


@pytest.fixture
def fill_store():
    """Factory: store with n uniform observations at one budget; loss defaults to the sum of unit coordinates."""

    def fill(space, n, rng, ids, budget=9.0, loss_fn=None, store=None):
        store = store if store is not None else ObservationStore()
        loss_fn = loss_fn or (lambda unit: float(np.sum(unit)))
        for _ in range(n):
            config = space.sample_uniform(rng, ids)
            store.record(Observation(config=config, budget=budget, loss=loss_fn(config.unit)))
        return store

    return fill


@pytest.fixture
def sampler_params():
    return SamplerParams()
