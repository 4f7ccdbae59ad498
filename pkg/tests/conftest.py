import math

import numpy as np
import pytest

from coinbar.state import WorldParams

UNIFORM = (1.0,) * 7
ONE_NIGHT = (0.0, 0.0, 0.0, 7.0, 0.0, 0.0, 0.0)


def phi_ref(alpha, y, c=6.0):
    """Plain-Python night reward, independent of the package tables."""
    return alpha * y * math.exp(-y / c)


def G_ref(picks, alpha, c=6.0):
    counts = [0] * len(alpha)
    for p in picks:
        if p >= 0:
            counts[p] += 1
    return sum(phi_ref(a, x, c) for a, x in zip(alpha, counts))


@pytest.fixture
def small_world():
    return WorldParams(alpha=(1.0, 2.0, 0.5), capacity=2.0, N=9)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
