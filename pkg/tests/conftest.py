import numpy as np
import pytest

from gammaratio.matrix import PositiveMatrix, log_uniform
from gammaratio.ratio import RatioConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_ratio_config(rng, max_dim=4, low=0.01, high=1.0, rho=None, rho_range=(-1.0, 2.0)):
    """Moderate-scale configs for the ratio checks; rho drawn from rho_range unless given."""
    m, n = rng.integers(1, max_dim + 1, size=2)
    mat = PositiveMatrix(log_uniform(rng, low, high, size=(m, n)))
    if rho is None:
        rho = float(rng.uniform(*rho_range))
    return RatioConfig(mat, rho)


def nondegenerate_config(rng, **kw):
    while True:
        cfg = random_ratio_config(rng, **kw)
        if not cfg.degenerate:
            return cfg
