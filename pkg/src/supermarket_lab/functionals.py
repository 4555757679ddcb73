"""Level-deficit functionals Q_j, P_{k-1} and related exact evaluations.

All sums run over exact integer deficit counts n(1 - u_i) = n - tail(i) and
are accumulated with math.fsum, so the only rounding is in the weights.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .coefficients import CoefficientTable
from .errors import ConfigurationError
from .profile import Profile


def as_profile(x) -> Profile:
    """Accept a Profile, a QueueVector, or a raw lengths sequence."""
    if isinstance(x, Profile):
        return x
    profile = getattr(x, "profile", None)
    if callable(profile):
        return profile()
    return Profile.from_lengths(np.asarray(x))


def deficit_counts(x, j_max: int) -> np.ndarray:
    """Integer array [n(1-u_1), ..., n(1-u_{j_max})]."""
    p = as_profile(x)
    tails = p.tail_counts(j_max)
    return p.n - tails[1:]


def q_functional(x, j: int, table: CoefficientTable) -> float:
    """Q_j(x) = n sum_{i<=j} w_{j,i} (1 - u_i(x)); weights are beta for j = k."""
    if not (1 <= j <= table.k):
        raise ConfigurationError(f"need 1 <= j <= k = {table.k}, got j = {j}")
    defs = deficit_counts(x, j)
    w = table.weights(j)
    return math.fsum(w[i] * defs[i] for i in range(j))


def p_functional(x, table: CoefficientTable) -> float:
    """P_{k-1}(x) = n sum_{i<=k-1} (1 - u_i(x))."""
    defs = deficit_counts(x, table.k - 1)
    return float(defs.sum())


def all_q(x, table: CoefficientTable) -> list[float]:
    """[Q_1, ..., Q_k]."""
    defs = deficit_counts(x, table.k)
    out = []
    for j in range(1, table.k + 1):
        w = table.weights(j)
        out.append(math.fsum(w[i] * defs[i] for i in range(j)))
    return out


def q_from_deficits(deficits: Sequence, j: int, table: CoefficientTable):
    """Q_j/n from fractional deficits (1-u_1, ..., 1-u_j); works on mpmath values."""
    w = table.weights(j)
    total = 0
    for i in range(j):
        total += w[i] * deficits[i]
    return total


def qjbound_holds(x, table: CoefficientTable, slack: float = 1e-9) -> bool:
    """Q_j(x) <= 2 n (lam d)^((j-1)/2) for all j (needs lam d >= 4)."""
    p = as_profile(x)
    for j, qj in enumerate(all_q(p, table), start=1):
        if qj > 2.0 * p.n * table.lambda_d ** ((j - 1) / 2.0) * (1 + slack) + slack:
            return False
    return True
