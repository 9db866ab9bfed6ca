import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from entropic_mcts.mdp import random_mdp

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_mdp():
    return random_mdp(3, 2, 3, 0.9, 5.0, 7)
