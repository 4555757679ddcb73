"""Simulation and verification lab for the discrete-time (n, d, lambda)
supermarket process in the heavy-traffic regime (lambda near 1, d large)."""

__version__ = "0.1.0"

from .params import Params, k_of, predicted_max_length
from .profile import Profile, ProfileEventSource, StepOutcome, step
from .coefficients import CoefficientTable, coefficients, beta_coeff, gamma_coeff
from .fixedpoint import FixedPoint, fixed_point
from .functionals import q_functional, p_functional, all_q
from .regime import RegimeReport, regime_check
from .budgets import Budgets, budgets, closed_form_budget
from .sets import set_membership, center_profile, sample_profile_in_N
from .engine import ObservationLog, simulate, hitting_exit_instrument
from .vector import (
    QueueVector,
    RandomTape,
    step_vector,
    run_coupled,
    coalescence_stats,
    relaxation_experiment,
)
from .paths import Path, path_in_N, validate_path
from .drift import (
    exact_drift_u,
    exact_drift_q,
    exact_drift_p,
    exact_drift_mass,
    verify_qk_bounds,
    verify_qj_bounds,
    verify_pk1_bound,
    verify_D1_bounds,
    montecarlo_drift,
)
from .oracle import build_kernel, stationary, tv_mixing

__all__ = [
    "Params", "k_of", "predicted_max_length",
    "Profile", "ProfileEventSource", "StepOutcome", "step",
    "CoefficientTable", "coefficients", "beta_coeff", "gamma_coeff",
    "FixedPoint", "fixed_point",
    "q_functional", "p_functional", "all_q",
    "RegimeReport", "regime_check",
    "Budgets", "budgets", "closed_form_budget",
    "set_membership", "center_profile", "sample_profile_in_N",
    "ObservationLog", "simulate", "hitting_exit_instrument",
    "QueueVector", "RandomTape", "step_vector", "run_coupled",
    "coalescence_stats", "relaxation_experiment",
    "Path", "path_in_N", "validate_path",
    "exact_drift_u", "exact_drift_q", "exact_drift_p", "exact_drift_mass",
    "verify_qk_bounds", "verify_qj_bounds", "verify_pk1_bound",
    "verify_D1_bounds", "montecarlo_drift",
    "build_kernel", "stationary", "tv_mixing",
]
