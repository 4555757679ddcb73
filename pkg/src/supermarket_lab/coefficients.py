"""Weight tables for the level-deficit functionals Q_j and P_{k-1}.

The top functional Q_k weights the level deficits with

    beta_i = 1 - (lam d)^-i - (i-1)(lam d)^-k,        i = 1..k,

an approximate dominant left eigenvector of the transition-linearization at
level k.  For j < k the weights are the exact tridiagonal-Toeplitz eigenvector

    gamma_{j,i} = (lam d)^((j-i)/2) sin(i pi/(j+1)) / sin(j pi/(j+1)),

with gamma_{j,0} = gamma_{j,j+1} = 0, so that

    lam d gamma_{j,i+1} + gamma_{j,i-1} = 2 sqrt(lam d) cos(pi/(j+1)) gamma_{j,i}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .params import Params


def beta_coeff(lambda_d: float, k: int, i: int) -> float:
    if i == 0:
        return 0.0
    return 1.0 - lambda_d ** (-i) - (i - 1) * lambda_d ** (-k)


def gamma_coeff(lambda_d: float, j: int, i: int) -> float:
    if i == 0 or i == j + 1:
        return 0.0
    if not (1 <= i <= j):
        raise ConfigurationError(f"gamma_{{{j},{i}}} undefined")
    return (
        lambda_d ** ((j - i) / 2.0)
        * math.sin(i * math.pi / (j + 1))
        / math.sin(j * math.pi / (j + 1))
    )


def eigen_residual(lambda_d: float, j: int, i: int) -> float:
    """|lam d g_{j,i+1} + g_{j,i-1} - 2 sqrt(lam d) cos(pi/(j+1)) g_{j,i}| / g_{j,i}."""
    g_prev = gamma_coeff(lambda_d, j, i - 1)
    g_here = gamma_coeff(lambda_d, j, i)
    g_next = gamma_coeff(lambda_d, j, i + 1)
    lhs = lambda_d * g_next + g_prev
    rhs = 2.0 * math.sqrt(lambda_d) * math.cos(math.pi / (j + 1)) * g_here
    return abs(lhs - rhs) / g_here


@dataclass(frozen=True)
class CoefficientTable:
    k: int
    lambda_d: float
    beta: tuple[float, ...]          # beta[i] for i = 0..k, beta[0] = 0
    gamma: tuple[tuple[float, ...], ...]  # gamma[j][i] for j = 1..k-1, i = 0..j+1

    def weight(self, j: int, i: int) -> float:
        """Weight of the level-i deficit inside Q_j (beta for j = k)."""
        if j == self.k:
            return self.beta[i]
        return self.gamma[j][i]

    def weights(self, j: int) -> tuple[float, ...]:
        """(w_1, ..., w_j) for Q_j."""
        if j == self.k:
            return self.beta[1:]
        return self.gamma[j][1 : j + 1]


def coefficients(params: Params) -> CoefficientTable:
    """Build the full table; requires k >= 2 and lam d >= 4."""
    k, ld = params.k, params.lambda_d
    if k < 2:
        raise ConfigurationError(f"coefficient table needs k >= 2, got k = {k}")
    if ld < 4.0:
        raise ConfigurationError(f"coefficient table needs lam*d >= 4, got {ld}")
    beta = tuple(beta_coeff(ld, k, i) for i in range(k + 1))
    gamma = tuple(
        tuple(gamma_coeff(ld, j, i) if 1 <= i <= j else 0.0 for i in range(j + 2))
        for j in range(k)  # gamma[0] unused placeholder, rows j = 1..k-1
    )
    table = CoefficientTable(k=k, lambda_d=ld, beta=beta, gamma=gamma)
    _check_invariants(table)
    return table


def _check_invariants(t: CoefficientTable) -> None:
    k, ld = t.k, t.lambda_d
    for i in range(1, k + 1):
        if not t.beta[i] < 1.0:
            raise ConfigurationError(f"beta_{i} = {t.beta[i]} not < 1")
        if i >= 2 and not t.beta[i] > t.beta[i - 1]:
            raise ConfigurationError("beta not increasing")
    expected_bk = 1.0 - k * ld ** (-k)
    if abs(t.beta[k] - expected_bk) > 1e-15 * max(1.0, abs(expected_bk)):
        raise ConfigurationError("beta_k != 1 - k (lam d)^-k")
    for j in range(1, k):
        if abs(t.gamma[j][j] - 1.0) > 1e-12:
            raise ConfigurationError(f"gamma_{{{j},{j}}} != 1")
        for i in range(1, j + 1):
            g = t.gamma[j][i]
            lo = ld ** ((j - i) / 2.0)
            if not (lo * (1 - 1e-12) <= g <= i * lo * (1 + 1e-12)):
                raise ConfigurationError(f"gamma_{{{j},{i}}} outside its bracket")
