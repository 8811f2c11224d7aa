import numpy as np
import pytest

from tsps.density import DensityGrid, normalize


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_grid(rng, dim, resolution):
    return normalize(DensityGrid(dim, resolution, rng.random((resolution,) * dim) + 1e-3))
