import math

import numpy as np
import pytest

from supermarket_lab import Params, Profile, all_q, coefficients, p_functional, q_functional
from supermarket_lab.functionals import qjbound_holds
from supermarket_lab.sets import random_profile


@pytest.fixture
def table100():
    return coefficients(Params(n=100, d=10, lam=0.9, k=3))


def test_empty_system_values(table100):
    empty = Profile.empty(100)
    # Q_1 = n (gamma_{1,1} = 1, full deficit)
    assert q_functional(empty, 1, table100) == pytest.approx(100.0)
    # Q_k = n sum beta_i
    assert q_functional(empty, 3, table100) == pytest.approx(100 * sum(table100.beta[1:]))
    # P_{k-1} = (k-1) n
    assert p_functional(empty, table100) == pytest.approx(200.0)


def test_saturated_system_values(table100):
    deep = Profile.all_at(100, 3)
    assert q_functional(deep, 3, table100) == 0.0
    allk1 = Profile.all_at(100, 2)  # length exactly k-1 everywhere
    assert p_functional(allk1, table100) == 0.0


def test_hand_counted_p2():
    # n = 4, lengths (0,1,2,2), k = 3: P_2 = 4[(1-3/4)+(1-1/2)] = 3
    t = coefficients(Params(n=4, d=10, lam=0.9, k=3))
    x = Profile.from_lengths([0, 1, 2, 2])
    assert p_functional(x, t) == pytest.approx(3.0)


def test_bound_chain_on_random_profiles(gen):
    p = Params(n=200, d=12, lam=0.9, k=4)
    t = coefficients(p)
    ld = p.lambda_d
    for _ in range(400):
        x = random_profile(200, 6, gen)
        q = all_q(x, t)
        n = 200
        defs = [x.deficit_count(j) for j in range(1, 5)]
        # Q_{j+1}/n <= (1-u_{j+1}) + 2 sqrt(ld) Q_j / n for j <= k-2
        for j in range(1, 3):
            assert q[j] / n <= defs[j] / n + 2 * math.sqrt(ld) * q[j - 1] / n + 1e-12
        # Q_k/n <= (1-u_k) + Q_{k-1}/n
        assert q[3] / n <= defs[3] / n + q[2] / n + 1e-12
        # Q_j <= 2 n (ld)^((j-1)/2)
        assert qjbound_holds(x, t)


def test_single_step_sensitivity(gen):
    # changing one queue by +-1 changes Q_j by at most gamma_{j,1} = ld^((j-1)/2)
    p = Params(n=50, d=10, lam=0.9, k=3)
    t = coefficients(p)
    for _ in range(50):
        lengths = gen.integers(0, 5, size=50)
        x = Profile.from_lengths(lengths)
        q0 = all_q(x, t)
        i = int(gen.integers(0, 50))
        lengths2 = lengths.copy()
        lengths2[i] += 1
        q1 = all_q(Profile.from_lengths(lengths2), t)
        for j in range(1, 4):
            assert abs(q1[j - 1] - q0[j - 1]) <= p.lambda_d ** ((j - 1) / 2) + 1e-12


def test_profile_bookkeeping(gen):
    x = Profile.from_lengths([0, 1, 3, 3])
    assert x.n == 4
    assert x.tail_count(1) == 3 and x.tail_count(3) == 2 and x.tail_count(7) == 0
    assert x.u(0) == 1.0
    assert x.norm1() == 7 and x.norminf() == 3
    assert np.array_equal(x.tail_counts(5), [4, 3, 2, 2, 0, 0])
    y = Profile.from_tail_counts(4, [3, 2, 2])
    assert y == x
