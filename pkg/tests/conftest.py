import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fnls.spectral import Field, Grid

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=10, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_field(grid: Grid, rng: np.random.Generator) -> Field:
    return Field(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


def smooth_field(grid: Grid, rng: np.random.Generator, width: float = 1.0) -> Field:
    """Gaussian in x times a random low-mode y profile; well resolved on moderate grids."""
    vals = np.exp(-0.5 * grid.r2 / width**2).astype(complex)
    for j in range(grid.m):
        y = grid.y(j)
        c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        vals = vals * (2.0 + 0.3 * (c[0] * np.cos(y) + c[1] * np.sin(y) + c[2] * np.cos(2 * y)))
    return Field(grid, vals)
