import numpy as np
import pytest

from supermarket_lab import kernels
from supermarket_lab.errors import StateSpaceError
from supermarket_lab.oracle import (
    build_kernel,
    lump_vector_kernel,
    profile_states,
    state_index_radix,
    stationary,
    tv_distance,
    tv_mixing,
)

# frozen regression fixture: n = 2, L = 3, d = 2, lam = 0.6 (linear solve)
FIXTURE_STATIONARY = {
    (0, 0, 0, 2): 0.019672992210567904,
    (0, 0, 1, 1): 0.04371776046792878,
    (0, 0, 2, 0): 0.04461041283018538,
    (0, 1, 0, 1): 0.03767002837737239,
    (0, 1, 1, 0): 0.11003951176518276,
    (0, 2, 0, 0): 0.11027253016329043,
    (1, 0, 0, 1): 0.03612607588544041,
    (1, 0, 1, 0): 0.10323171934988122,
    (1, 1, 0, 0): 0.2698139830637185,
    (2, 0, 0, 0): 0.2248449858864322,
}


def test_profile_state_enumeration():
    states = profile_states(2, 3)
    assert len(states) == 10
    assert all(sum(s) == 2 for s in states)
    assert len(set(states)) == 10


def test_rows_stochastic_and_irreducible():
    c = build_kernel(2, 4, 2, 0.6, "profile")
    assert np.abs(c.P.sum(axis=1) - 1).max() < 1e-12
    # the idle self-loop at the empty state gives aperiodicity
    assert c.P[c.index[(2, 0, 0, 0, 0)], c.index[(2, 0, 0, 0, 0)]] > 0
    pi = stationary(c)
    assert pi.min() > 0  # irreducible: every state carries stationary mass


def test_n1_birth_death_geometric():
    # n = 1: up-prob lam/(1+lam), down-prob 1/(1+lam); capped stationary is the
    # truncated geometric proportional to lam^j
    lam, L = 0.7, 6
    c = build_kernel(1, L, 1, lam, "profile")
    pi = stationary(c)
    by_len = np.zeros(L + 1)
    for i, s in enumerate(c.states):
        by_len[next(j for j, v in enumerate(s) if v == 1)] = pi[i]
    geo = lam ** np.arange(L + 1)
    geo /= geo.sum()
    assert np.abs(by_len - geo).max() < 1e-14


def test_n2_L1_handbuilt_kernel():
    # 3 profile states: (0,2) both busy, (1,1), (2,0) both empty; d = 2
    lam = 0.6
    pa = lam / (1 + lam)
    pd = 1 - pa
    c = build_kernel(2, 1, 2, lam, "profile")
    P = c.P
    i_empty = c.index[(2, 0)]
    i_mixed = c.index[(1, 1)]
    i_full = c.index[(0, 2)]
    # from both-empty: arrival joins one queue (prob pa), stays otherwise
    assert P[i_empty, i_mixed] == pytest.approx(pa)
    assert P[i_empty, i_empty] == pytest.approx(pd)
    # from mixed: arrival joins the empty queue unless both picks hit the busy
    # one (1/4 of the 4 ordered pairs, rejected at the cap)
    assert P[i_mixed, i_full] == pytest.approx(pa * 3 / 4)
    assert P[i_mixed, i_empty] == pytest.approx(pd * 1 / 2)
    assert P[i_mixed, i_mixed] == pytest.approx(pa * 1 / 4 + pd * 1 / 2)
    # from full: departures only
    assert P[i_full, i_mixed] == pytest.approx(pd)
    assert P[i_full, i_full] == pytest.approx(pa + pd * 0)  # arrivals all rejected


def test_lumping_commutes_exactly():
    v = build_kernel(3, 3, 2, 0.55, "vector")
    lumped, cls = lump_vector_kernel(v)
    direct = build_kernel(3, 3, 2, 0.55, "profile")
    assert np.allclose(lumped.P, direct.P, atol=1e-12, rtol=0)
    pi_v = stationary(v)
    pi_p = stationary(direct)
    pushed = np.zeros(len(direct.states))
    np.add.at(pushed, cls, pi_v)
    assert np.abs(pushed - pi_p).max() < 1e-12


def test_stationary_regression_fixture():
    c = build_kernel(2, 3, 2, 0.6, "profile")
    pi = stationary(c)
    for s, v in FIXTURE_STATIONARY.items():
        assert pi[c.index[s]] == pytest.approx(v, rel=1e-12)


def test_uniform_kernel_sanity():
    import supermarket_lab.oracle as om

    m = 6
    chain = om.CappedChain(
        n=1, L=5, d=1, lam=0.5, representation="profile",
        states=[(i,) for i in range(m)], index={(i,): i for i in range(m)},
        P=np.full((m, m), 1.0 / m),
    )
    pi = stationary(chain)
    assert np.allclose(pi, 1.0 / m)


def test_tv_mixing_monotone_and_eigen_bracket():
    c = build_kernel(1, 5, 1, 0.6, "profile")
    t, curve = tv_mixing(c, (1, 0, 0, 0, 0, 0), 1e-3)
    assert all(curve[i + 1] <= curve[i] + 1e-14 for i in range(len(curve) - 1))
    # decay rate is governed by the second-largest eigenvalue modulus
    ev = np.sort(np.abs(np.linalg.eigvals(c.P)))[::-1]
    slem = ev[1]
    pi = stationary(c)
    t_upper = int(np.ceil(np.log(1e-3 * pi.min()) / np.log(slem))) + 1
    assert t <= t_upper
    # late-curve ratio approaches the SLEM
    ratios = [curve[i + 1] / curve[i] for i in range(t - 5, t - 1)]
    assert abs(np.mean(ratios) - slem) < 0.05


def test_state_space_guard():
    with pytest.raises(StateSpaceError):
        build_kernel(4, 40, 2, 0.5, "vector")  # 41^4 > 1e6 states: refused


def test_hist_index_matches_kernel_encoding():
    c = build_kernel(2, 4, 2, 0.6, "profile")
    hidx = c.hist_index()
    assert len(set(hidx.tolist())) == len(c.states)
    assert hidx[c.index[(2, 0, 0, 0, 0)]] == state_index_radix((2, 0, 0, 0, 0), 3)


def test_engine_agreement_modest_sample():
    # quick version of the acceptance check: both engines within TV 0.05 of
    # the exact stationary at 2e5 samples
    c = build_kernel(2, 4, 2, 0.6, "profile")
    pi = stationary(c)
    hidx = c.hist_index()
    samples = 200_000
    tail = np.zeros(16, dtype=np.int64)
    tail[0] = 2
    hist = np.zeros(3**5, dtype=np.int64)
    kernels.profile_chain(
        tail, 2, 2, 0.6, samples, np.uint64(3), 0, 4,
        0, np.zeros(0), np.zeros(1), 0, 0, np.zeros((0, 3), dtype=np.int64),
        1, 3, 5, hist, np.zeros(kernels.N_COUNTERS, dtype=np.int64),
    )
    assert tv_distance(hist[hidx] / samples, pi) < 0.05
    lengths = np.zeros(2, dtype=np.int64)
    hist_v = np.zeros(3**5, dtype=np.int64)
    kernels.vector_chain_hist(lengths, 2, 0.6, samples, np.uint64(4), 0, 4, 3, 5, hist_v, 0)
    assert tv_distance(hist_v[hidx] / samples, pi) < 0.05
