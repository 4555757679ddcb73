"""Mean-field ODE  dv_j/dt = lam (v_{j-1}^d - v_j^d) - (v_j - v_{j+1}),  v_0 = 1.

The integrator works on a truncated vector (v_1..v_J) with v_{J+1} = 0.
Scheme defaults to RK4 with dt = 1e-3 and J = 50; both are recorded in run
metadata because no particular scheme is prescribed by the model.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .params import Params

DEFAULT_DT = 1e-3
DEFAULT_TRUNCATION = 50
MONOTONE_TOL = 1e-12


def ode_derivative(v: np.ndarray, params: Params) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    lam, d = params.lam, params.d
    vd = np.empty(len(v) + 1)
    vd[0] = 1.0
    vd[1:] = v**d
    ext = np.append(v, 0.0)  # v_{J+1} = 0
    return lam * (vd[:-1] - vd[1:]) - (v - ext[1:])


def ode_step(v: np.ndarray, dt: float, params: Params, scheme: str = "rk4") -> np.ndarray:
    """One explicit step; clips to [0,1] and re-sorts monotone drift <= 1e-12."""
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    v = np.asarray(v, dtype=float)
    if scheme == "euler":
        out = v + dt * ode_derivative(v, params)
    elif scheme == "rk4":
        k1 = ode_derivative(v, params)
        k2 = ode_derivative(v + 0.5 * dt * k1, params)
        k3 = ode_derivative(v + 0.5 * dt * k2, params)
        k4 = ode_derivative(v + dt * k3, params)
        out = v + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    else:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    out = np.clip(out, 0.0, 1.0)
    worst = float(np.max(np.diff(out), initial=-np.inf))
    if worst > MONOTONE_TOL:
        raise ConfigurationError(f"monotonicity broken by {worst:g} in one step")
    # remove sub-tolerance inversions so downstream code sees a valid profile
    return np.minimum.accumulate(out)


def integrate(
    v0: np.ndarray,
    t_end: float,
    params: Params,
    dt: float = DEFAULT_DT,
    scheme: str = "rk4",
) -> tuple[np.ndarray, dict]:
    """Integrate to t_end; returns (v, metadata)."""
    v = np.asarray(v0, dtype=float).copy()
    steps = int(round(t_end / dt))
    for _ in range(steps):
        v = ode_step(v, dt, params, scheme=scheme)
    meta = {"scheme": scheme, "dt": dt, "steps": steps, "truncation": len(v)}
    return v, meta
