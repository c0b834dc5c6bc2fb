import math

import numpy as np
import pytest

from fbmlab.spectral_core import Grid, forward_transform


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_real_field(grid, rng, band=None):
    f = forward_transform(rng.standard_normal(grid.shape), grid)
    if band is not None:
        lo, hi = band
        keep = (grid.abs_xi >= lo) & (grid.abs_xi <= hi) & ~grid.nyquist_mask
        f = f.with_coeffs(f.coeffs * keep)
    return f


@pytest.fixture
def grid1():
    return Grid(1, 64)


@pytest.fixture
def grid2():
    return Grid(2, 32)


TWO_PI = 2 * math.pi
