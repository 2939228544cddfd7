import numpy as np
import pytest

from platelab import Field, make_grid


@pytest.fixture
def grid1d():
    return make_grid(1, 4.0, 64)


@pytest.fixture
def grid2d():
    return make_grid(2, 4.0, 16)


def random_field(grid, rng, scale=1.0):
    return Field(grid, scale * rng.standard_normal(grid.shape))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
