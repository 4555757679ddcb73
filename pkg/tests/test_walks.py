import math

import pytest

from supermarket_lab.errors import ConfigurationError
from supermarket_lab.walks import (
    ReturnWalkSpec,
    WalkSpec,
    chernoff_check,
    crossing_bound_experiment,
    drifts_down_experiment,
    gamblers_ruin_top,
    hitting_bound_experiment,
    return_time_experiment,
)

TRIALS = 20_000


def test_deterministic_drift_never_fails():
    v = hitting_bound_experiment(
        WalkSpec(v=0.5, m=400, law="det", r0=100, r1=0), TRIALS, 1
    )
    assert v.empirical == 0.0 and v.ok_bound and v.ok_oracle


def test_hitting_precondition():
    with pytest.raises(ConfigurationError):
        hitting_bound_experiment(WalkSpec(v=0.1, m=100, r0=100, r1=0), 10, 1)


def test_hitting_pm1_oracle_and_bound():
    v = hitting_bound_experiment(WalkSpec(v=0.2, m=2000, r0=100, r1=0), TRIALS, 2)
    assert v.bound == pytest.approx(math.exp(-10))
    assert v.oracle < v.bound
    assert v.ok_bound and v.ok_oracle


def test_hitting_short_steep():
    v = hitting_bound_experiment(WalkSpec(v=0.999, m=10, r0=1, r1=0), TRIALS, 3)
    assert v.bound == pytest.approx(math.exp(-0.999**2 * 10 / 8))
    assert v.ok_bound and v.ok_oracle


def test_crossing_closed_form_value():
    # frozen from the gambler's-ruin oracle; sits just under e^-4
    g = gamblers_ruin_top(0.1, 20, 20)
    assert g == pytest.approx(0.017750809579360514, rel=1e-12)
    assert g <= math.exp(-4)


def test_crossing_bound_and_oracle():
    v = crossing_bound_experiment(WalkSpec(v=0.1, m=0, a=20, b=20), TRIALS, 4)
    assert v.ok_bound and v.ok_oracle


def test_crossing_degenerate_band_is_trivial():
    # a -> 0+: the bound e^{-2va} -> 1 dominates any probability
    assert math.exp(-2 * 0.3 * 0.0) == 1.0


def test_crossing_adversarial_schedule():
    # disabling the drift below h0 - 5 (and failing the good event there)
    # keeps the bound valid; the oracle accounts for the absorbed paths
    v = crossing_bound_experiment(
        WalkSpec(v=0.1, m=0, a=20, b=20, drift_off_below=5), TRIALS, 5
    )
    assert v.oracle < gamblers_ruin_top(0.1, 20, 20)
    assert v.ok_bound and v.ok_oracle


def test_drifts_down_parts():
    p1, p2 = drifts_down_experiment(
        WalkSpec(v=0.3, m=200, r0=20, r1=0, rho=10, s=1000), TRIALS, 6
    )
    assert p1.ok_bound and p1.ok_oracle
    assert p2.ok_bound and p2.ok_oracle
    _, tight = drifts_down_experiment(
        WalkSpec(v=0.3, m=200, r0=20, r1=0, rho=30, s=1000), TRIALS, 7
    )
    assert tight.bound < 1.0  # non-vacuous configuration
    assert tight.ok_bound and tight.ok_oracle


def test_return_time_bound_and_oracle():
    v = return_time_experiment(ReturnWalkSpec(delta=0.4, k0=3, s0=5, m=10_000), TRIALS, 8)
    assert v.bound == pytest.approx(min(1.0, 3 * math.exp(-0.4**2 * 10_000 / 600)))
    assert v.ok_bound and v.ok_oracle


def test_return_time_degenerate_everywhere_down():
    # k0 = 1: the 3/4-down rule applies from level 1 up; returns are fast
    v = return_time_experiment(ReturnWalkSpec(delta=0.4, k0=1, s0=5, m=2000), TRIALS, 9)
    assert v.empirical == 0.0 and v.ok_bound


def test_return_time_capped_good_events_exact():
    v = return_time_experiment(
        ReturnWalkSpec(delta=0.3, k0=3, s0=5, m=10_000, cap=40), TRIALS, 10
    )
    assert v.oracle is not None
    assert v.ok_bound and v.ok_oracle


def test_return_time_s0_above_window():
    # Pr(S0 > floor(m/16)) = 1 makes the bound vacuous but still valid
    v = return_time_experiment(ReturnWalkSpec(delta=0.4, k0=2, s0=50, m=100), 2000, 11)
    assert v.bound == 1.0 and v.ok_bound


def test_chernoff_trivial_eps_zero():
    vb, vp = chernoff_check(50.0, 0.0, 2000, 12)
    assert vb.bound == 1.0 and vp.bound == 1.0
    assert vb.ok_bound and vp.ok_bound


def test_chernoff_binomial_and_poisson():
    vb, vp = chernoff_check(300.0, 0.2, 100_000, 13, n_binom=1000)
    assert vb.oracle <= math.exp(-6) and vb.ok_bound and vb.ok_oracle
    assert vp.ok_bound and vp.ok_oracle
    vb2, vp2 = chernoff_check(50.0, 0.5, 100_000, 14)
    assert vb2.ok_bound and vb2.ok_oracle
    assert vp2.ok_bound and vp2.ok_oracle


def test_reversed_variant_mirrors():
    # negating the walk turns the crossing-up experiment into a crossing-down
    # experiment with a and b swapped; the closed form must mirror exactly
    v, a, b = 0.15, 12, 7
    up = gamblers_ruin_top(v, a, b)
    # reversed: drift +v, ask P(hit -a before +b) = same formula with roles swapped
    rho = (1 + v) / (1 - v)
    down_reversed = (rho**b - 1) / (rho ** (a + b) - 1)
    assert up == pytest.approx(down_reversed, rel=1e-12)
    # and empirically: simulate the negated spec by symmetry of the pm1 law
    fwd = crossing_bound_experiment(WalkSpec(v=v, m=0, a=a, b=b), TRIALS, 15)
    assert fwd.oracle == pytest.approx(up, rel=1e-9)
