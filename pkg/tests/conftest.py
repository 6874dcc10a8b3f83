import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from labelling.feature import whitened_monomial_map
from labelling.noise import uniform_box

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def box():
    return uniform_box((-1, -1), (1, 1))


@pytest.fixture(scope="session")
def wmap(box):
    return whitened_monomial_map(2, 2, box, seed=0)


def circle_points(n, r=0.8, cx=0.0, cy=0.0, seed=0):
    t = np.random.default_rng(seed).uniform(0, 2 * np.pi, n)
    return np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])
