import numpy as np
import pytest

import supermarket_lab as sl


@pytest.fixture
def gen():
    return np.random.default_rng(20240817)


@pytest.fixture
def desk_params():
    """The workhorse desk-scale tuple used by the path/sandwich experiments."""
    return sl.Params(n=10_000, d=30, lam=0.99, eps=0.1)


@pytest.fixture
def small_params():
    return sl.Params(n=100, d=5, lam=0.9, k=2)
