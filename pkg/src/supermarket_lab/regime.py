"""Admissible-regime checker.

Evaluates the six hypothesis inequalities

    (H1)  d^k (1-lam)        >= 2 log^2 n
    (H2)  k                  >= 2
    (H3)  eps                <= 1/10
    (H4)  eps sqrt(d)        >= 150 k
    (H5)  eps                >= 100 k (1-lam) d^(k-1)
    (H6)  eps^2 d n (1-lam)^2 >= 600 k^2 log^2 n

and the derived consequences (implied whenever H1..H6 all hold)

    (D1)  n >= 10^15
    (D2)  eps d >= 200 k log^2 n
    (D3)  log^2 n (1-lam) <= eps^2 / 80000
    (D4)  k = ceil(log(1-lam)^-1 / log d)
    (D5)  eps^3 n (1-lam) >= 60000 k^3 log^2 n d^(k-2)
    (D6)  eps n (1-lam) >= 60000
    (D7)  k <= log n
    (D8)  d^k (1-lam) >= 2 k log n
    (D9)  lam^k >= 9/10
    (D10) 1 - k (lam d)^-k >= 1 - eps/2
    (D11) 1/(sqrt(lam d) - 1) <= eps/(2k)   [geometric tail sum]

All arithmetic runs at 50 significant decimal digits: the satisfying tuples
live at n >= 10^15 and 1-lam <= 1e-10, where doubles are not trustworthy.
Logs are natural.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath as mp

from .params import Params

_DPS = 50

N_THRESHOLD = 10**15


@dataclass(frozen=True)
class Inequality:
    ineq_id: str
    description: str
    lhs: str   # decimal string, big-float value
    rhs: str
    relation: str  # '<=' or '>=' or '=='
    holds: bool


@dataclass(frozen=True)
class RegimeReport:
    params: Params
    hypotheses: tuple[Inequality, ...]
    derived: tuple[Inequality, ...]
    overall: bool
    notes: tuple[str, ...] = field(default_factory=tuple)

    def failed(self) -> list[Inequality]:
        return [q for q in self.hypotheses if not q.holds]

    def derived_consistent(self) -> bool:
        """Whenever the hypotheses hold, every derived inequality must hold."""
        if not self.overall:
            return True
        return all(q.holds for q in self.derived)


def _ineq(ineq_id, description, lhs, rhs, relation) -> Inequality:
    if relation == "<=":
        holds = lhs <= rhs
    elif relation == ">=":
        holds = lhs >= rhs
    else:
        holds = lhs == rhs
    return Inequality(
        ineq_id=ineq_id,
        description=description,
        lhs=mp.nstr(mp.mpf(lhs), 17),
        rhs=mp.nstr(mp.mpf(rhs), 17),
        relation=relation,
        holds=bool(holds),
    )


def regime_check(params: Params) -> RegimeReport:
    with mp.workdps(_DPS):
        n = mp.mpf(params.n)
        d = mp.mpf(params.d)
        k = mp.mpf(params.k)
        lam = mp.mpf(repr(params.lam))
        eps = mp.mpf(repr(params.eps))
        one_m = 1 - lam
        log2n = mp.log(n) ** 2
        ld = lam * d

        hyp = (
            _ineq("H1", "d^k (1-lam) >= 2 log^2 n", d**k * one_m, 2 * log2n, ">="),
            _ineq("H2", "k >= 2", k, 2, ">="),
            _ineq("H3", "eps <= 1/10", eps, mp.mpf(1) / 10, "<="),
            _ineq("H4", "eps sqrt(d) >= 150 k", eps * mp.sqrt(d), 150 * k, ">="),
            _ineq("H5", "eps >= 100 k (1-lam) d^(k-1)", eps, 100 * k * one_m * d ** (k - 1), ">="),
            _ineq(
                "H6",
                "eps^2 d n (1-lam)^2 >= 600 k^2 log^2 n",
                eps**2 * d * n * one_m**2,
                600 * k**2 * log2n,
                ">=",
            ),
        )

        k_ceil = mp.ceil(mp.log(1 / one_m) / mp.log(d))
        derived = (
            _ineq("D1", "n >= 10^15 (n-threshold)", n, mp.mpf(10) ** 15, ">="),
            _ineq("D2", "eps d >= 200 k log^2 n", eps * d, 200 * k * log2n, ">="),
            _ineq("D3", "log^2 n (1-lam) <= eps^2/80000", log2n * one_m, eps**2 / 80000, "<="),
            _ineq("D4", "k = ceil(log(1-lam)^-1 / log d)", k, k_ceil, "=="),
            _ineq(
                "D5",
                "eps^3 n (1-lam) >= 60000 k^3 log^2 n d^(k-2)",
                eps**3 * n * one_m,
                60000 * k**3 * log2n * d ** (k - 2),
                ">=",
            ),
            _ineq("D6", "eps n (1-lam) >= 60000", eps * n * one_m, 60000, ">="),
            _ineq("D7", "k <= log n", k, mp.log(n), "<="),
            _ineq("D8", "d^k (1-lam) >= 2 k log n", d**k * one_m, 2 * k * mp.log(n), ">="),
            _ineq("D9", "lam^k >= 9/10", lam**k, mp.mpf(9) / 10, ">="),
            _ineq("D10", "1 - k (lam d)^-k >= 1 - eps/2", 1 - k * ld**-k, 1 - eps / 2, ">="),
            _ineq(
                "D11",
                "1/(sqrt(lam d)-1) <= eps/(2k)",
                1 / (mp.sqrt(ld) - 1) if ld > 1 else mp.inf,
                eps / (2 * k),
                "<=",
            ),
        )

        overall = all(q.holds for q in hyp)
        notes = []
        if params.n < N_THRESHOLD:
            notes.append(
                "unsatisfied: n-threshold (hypotheses jointly force n >= 10^15; "
                f"n = {params.n})"
            )
        if overall and not all(q.holds for q in derived):
            notes.append("INTERNAL INCONSISTENCY: hypotheses hold but a derived bound fails")

    return RegimeReport(
        params=params,
        hypotheses=hyp,
        derived=derived,
        overall=overall,
        notes=tuple(notes),
    )
