import numpy as np
import pytest

from supermarket_lab import Params, fixed_point
from supermarket_lab.errors import ConfigurationError
from supermarket_lab.ode import integrate, ode_derivative, ode_step


def test_fixed_point_is_stationary():
    # lam = 0.9, d = 2: pi(j) does not underflow for moderate j
    p = Params(n=10, d=2, lam=0.9, k=2)
    fp = fixed_point(p, 50)
    v = np.array([fp.pi(j)[0] for j in range(1, 51)])
    dv = ode_derivative(v, p)
    assert np.max(np.abs(dv)) < 1e-12


def test_empty_state_derivative():
    p = Params(n=10, d=3, lam=0.65, k=2)
    dv = ode_derivative(np.zeros(10), p)
    assert dv[0] == pytest.approx(0.65)
    assert np.all(dv[1:] == 0)


def test_d1_geometric_is_stationary():
    p = Params(n=10, d=1, lam=0.5, k=1)
    v = 0.5 ** np.arange(1, 51)
    dv = ode_derivative(v, p)
    assert np.max(np.abs(dv)) < 1e-12


def test_step_preserves_monotone_profile():
    p = Params(n=10, d=2, lam=0.9, k=2)
    v = np.linspace(0.9, 0.0, 50)
    for scheme in ("euler", "rk4"):
        out = ode_step(v, 1e-3, p, scheme=scheme)
        assert np.all(np.diff(out) <= 1e-12)
        assert np.all((0 <= out) & (out <= 1))
    with pytest.raises(ConfigurationError):
        ode_step(v, 0.0, p)
    with pytest.raises(ConfigurationError):
        ode_step(v, 1e-3, p, scheme="leapfrog")


def test_integration_converges_to_fixed_point():
    p = Params(n=10, d=2, lam=0.9, k=2)
    fp = fixed_point(p, 30)
    target = np.array([fp.pi(j)[0] for j in range(1, 31)])
    v, meta = integrate(np.zeros(30), t_end=250.0, params=p, dt=1e-2)
    assert meta["scheme"] == "rk4" and meta["dt"] == 1e-2
    assert np.max(np.abs(v - target)) < 1e-6
