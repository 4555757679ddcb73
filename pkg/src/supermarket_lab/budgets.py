"""Step budgets for the hitting/exit ledger and the mixing-time statements.

    q(ell, g)  = (23 k + 72 g) eps^-1 n (1-lam)^-1 + 8 ell n
    s0         = e^{(1/3) log^2 n}
    m_B        = 8 k eps^-1 n (1-lam)^-1
    m_C        = 12 k n (1-lam)^-1 (lam d)^{1-k}
    m_D        = 8 eps^-1 n (1-lam)^-1 (lam d)^{-k/2}
    m_E        = (13 k + 72 g) eps^-1 n (1-lam)^-1
    m_G        = 32 k eps^-1 n (1-lam)^-1 (lam d)^{-1}   (per level j)
    m_H        = n (8 ell + 32 log^2 n)

q dominates m_B + m_C + m_D + m_E + (k-1) m_G + m_H; the constructor checks
q >= each m individually.  The mixing-rate denominators 1600 k d^{k-1} n and
3200 k d^{k-1} n are carried along for the coalescence experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp

from .errors import ConfigurationError
from .params import Params


@dataclass(frozen=True)
class Budgets:
    params: Params
    ell: float
    g: float
    q: float
    s0: mp.mpf           # can exceed the double range
    m_B: float
    m_C: float
    m_D: float
    m_E: float
    m_G: float
    m_H: float
    mixing_denom_good: float   # 1600 k d^(k-1) n
    mixing_denom_general: float  # 3200 k d^(k-1) n

    def s0_float(self) -> float:
        f = float(self.s0)
        return f if math.isfinite(f) else math.inf

    def all_m(self) -> dict[str, float]:
        return {
            "m_B": self.m_B,
            "m_C": self.m_C,
            "m_D": self.m_D,
            "m_E": self.m_E,
            "m_G": self.m_G,
            "m_H": self.m_H,
        }


def budgets(params: Params, ell: float, g: float) -> Budgets:
    k = params.k
    if ell < k or g < k:
        raise ConfigurationError(f"need ell, g >= k = {k}; got ell = {ell}, g = {g}")
    n, eps, lam, d = params.n, params.eps, params.lam, params.d
    inv = 1.0 / (1.0 - lam)
    ld = params.lambda_d
    q = (23 * k + 72 * g) / eps * n * inv + 8 * ell * n
    with mp.workdps(30):
        s0 = mp.e ** (mp.log(n) ** 2 / 3)
    b = Budgets(
        params=params,
        ell=ell,
        g=g,
        q=q,
        s0=s0,
        m_B=8 * k / eps * n * inv,
        m_C=12 * k * n * inv * ld ** (1 - k),
        m_D=8 / eps * n * inv * ld ** (-k / 2),
        m_E=(13 * k + 72 * g) / eps * n * inv,
        m_G=32 * k / eps * n * inv / ld,
        m_H=n * (8 * ell + 32 * math.log(n) ** 2),
        mixing_denom_good=1600.0 * k * d ** (k - 1) * n,
        mixing_denom_general=3200.0 * k * d ** (k - 1) * n,
    )
    for name, m in b.all_m().items():
        if not q >= m:
            raise ConfigurationError(f"budget inconsistency: q = {q} < {name} = {m}")
    return b


def closed_form_budget(params: Params, norm1: float, norminf: float) -> float:
    """(6000 k n + 4320 ||x||_1)(1-lam)^-1 + 8 n ||x||_inf, the closed form that
    dominates q(max(k, ||x||_inf), max(k, ||x||_1/n)) at eps = 1/60."""
    n, k, lam = params.n, params.k, params.lam
    return (6000 * k * n + 4320 * norm1) / (1 - lam) + 8 * n * norminf
