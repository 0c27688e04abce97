import numpy as np
import pytest

from decfilt.models import DiscreteHMM, canonical_model


@pytest.fixture
def c1():
    return canonical_model()


@pytest.fixture
def uniform_model():
    return DiscreteHMM([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]])


def random_model(rng, n_states, n_obs):
    """Strictly positive random tables."""
    prior = rng.dirichlet(np.ones(n_states))
    trans = rng.dirichlet(np.ones(n_states), size=n_states)
    obs = rng.dirichlet(np.ones(n_obs), size=n_states)
    return DiscreteHMM(prior, trans, obs)
