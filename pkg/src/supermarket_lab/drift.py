"""Exact one-step drifts of u_i, Q_j, P_{k-1}, ||x||_1 and mechanical checks of
the displayed drift bounds.

The drift of F is E[F(X_{t+1}) - F(X_t) | X_t = x].  For the profile chain all
of these are finite exact sums:

    (1+lam) n Delta u_i(x) = lam (u_{i-1}^d - u_i^d) - (u_i - u_{i+1})

and the functionals are fixed linear combinations of the u_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .coefficients import CoefficientTable, coefficients
from .errors import ConfigurationError, RegimeUnsatisfiedError
from .functionals import as_profile
from .params import Params
from .profile import Profile

FLOAT_SLACK = 1e-9  # allowance for accumulated rounding in bound comparisons


def _u(p: Profile, i: int) -> float:
    return p.tail_count(i) / p.n


def exact_drift_u(x, i: int, params: Params) -> float:
    """Exact drift of u_i from the profile; i >= 1."""
    if i < 1:
        raise ConfigurationError("i must be >= 1")
    p = as_profile(x)
    lam, d, n = params.lam, params.d, p.n
    ui_m = _u(p, i - 1)
    ui = _u(p, i)
    ui_p = _u(p, i + 1)
    return (lam * (ui_m**d - ui**d) - (ui - ui_p)) / (n * (1.0 + lam))


def exact_drift_q(x, j: int, params: Params, table: CoefficientTable | None = None) -> float:
    """Drift of Q_j as the exact weighted sum -n sum_i w_{j,i} drift(u_i)."""
    table = table or coefficients(params)
    p = as_profile(x)
    w = table.weights(j)
    return -p.n * math.fsum(w[i - 1] * exact_drift_u(p, i, params) for i in range(1, j + 1))


def exact_drift_p(x, params: Params, table: CoefficientTable | None = None) -> float:
    table = table or coefficients(params)
    p = as_profile(x)
    k = table.k
    return -p.n * math.fsum(exact_drift_u(p, i, params) for i in range(1, k))


def exact_drift_mass(x, params: Params) -> float:
    """Drift of ||x||_1: (lam - u_1(x)) / (1 + lam)."""
    p = as_profile(x)
    return (params.lam - _u(p, 1)) / (1.0 + params.lam)


# ---------------------------------------------------------------------------
# independent enumeration oracle


def enumerated_arrival_counts(x, d: int, choice_cap: int = 2_000_000) -> np.ndarray:
    """counts[j] = number of ordered d-tuples whose joined queue has length j.

    Brute force over all n^d tuples on a concrete vector realization of the
    profile, applying the least-index-in-the-list minimum rule; exact integer
    counts, independent of the threshold-sampling formula.
    """
    p = as_profile(x)
    n = p.n
    if n**d > choice_cap:
        raise ConfigurationError(f"n^d = {n**d} exceeds enumeration cap")
    lengths = np.repeat(np.arange(len(p.counts), dtype=np.int64), p.counts)
    tuples = np.indices((n,) * d).reshape(d, -1).T  # ordered tuples, n^d rows
    vals = lengths[tuples]
    first_min = np.argmin(vals, axis=1)  # first occurrence = least list index
    joined = tuples[np.arange(len(tuples)), first_min]
    return np.bincount(lengths[joined], minlength=len(p.counts))


def enumerated_drift_u(x, i: int, params: Params, arrival_counts=None) -> float:
    """Drift of u_i by brute-force enumeration of the vector-level kernel.

    Exact rational arithmetic on the enumerated integer counts; the arrival
    count table can be shared across levels i.
    """
    if i < 1:
        raise ConfigurationError("i must be >= 1")
    p = as_profile(x)
    n, d = p.n, params.d
    lam_f = Fraction(params.lam)  # exact binary value of lam
    if arrival_counts is None:
        arrival_counts = enumerated_arrival_counts(p, d)
    # arrival at a length-(i-1) queue raises u_i by 1/n
    arr_w = Fraction(int(arrival_counts[i - 1]) if i - 1 < len(arrival_counts) else 0, n**d)
    # departure from a length-i queue lowers u_i by 1/n
    dep_w = -Fraction(int(p.counts[i]) if i < len(p.counts) else 0, n)
    pa = lam_f / (1 + lam_f)
    drift = (pa * arr_w + (1 - pa) * dep_w) / n
    return float(drift)


# ---------------------------------------------------------------------------
# bound reports


@dataclass(frozen=True)
class DriftReport:
    functional: str
    state_id: str
    exact: float
    lower: float | None
    upper: float | None
    ok_lower: bool
    ok_upper: bool
    slack_lower: float | None
    slack_upper: float | None
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.ok_lower and self.ok_upper

    def row(self) -> list:
        return [
            self.state_id,
            self.functional,
            repr(self.exact),
            "" if self.lower is None else repr(self.lower),
            "" if self.upper is None else repr(self.upper),
            "" if self.slack_lower is None else repr(self.slack_lower),
            "" if self.slack_upper is None else repr(self.slack_upper),
            "ok" if self.ok else "VIOLATION",
        ]


CSV_HEADER = [
    "state-id", "functional", "exact", "lower", "upper",
    "slack-low", "slack-high", "verdict",
]


def _report(functional, state_id, exact, lower, upper, note="") -> DriftReport:
    ok_l = True if lower is None else exact >= lower - FLOAT_SLACK
    ok_u = True if upper is None else exact <= upper + FLOAT_SLACK
    return DriftReport(
        functional=functional,
        state_id=state_id,
        exact=exact,
        lower=lower,
        upper=upper,
        ok_lower=ok_l,
        ok_upper=ok_u,
        slack_lower=None if lower is None else exact - lower,
        slack_upper=None if upper is None else upper - exact,
        note=note,
    )


def _require_k_ld(params: Params) -> None:
    if params.k < 2 or params.lambda_d < 4.0:
        raise ConfigurationError(
            f"drift bounds need k >= 2 and lam d >= 4 (k = {params.k}, lam d = {params.lambda_d})"
        )


def verify_qk_bounds(x, params: Params, state_id: str = "", table=None) -> DriftReport:
    """Two-sided bound on (1+lam) Delta Q_k, valid for every state."""
    _require_k_ld(params)
    table = table or coefficients(params)
    p = as_profile(x)
    n, k, lam, d, ld = p.n, params.k, params.lam, params.d, params.lambda_d
    bk = table.beta[k]
    qk = _weighted(p, table, k)
    qk1 = _weighted(p, table, k - 1) if k >= 2 else 0.0
    u_k1 = _u(p, k + 1)
    lhs = (1.0 + lam) * exact_drift_q(p, k, params, table)
    upper = (
        bk * ((1 - lam) - u_k1 + lam * math.exp(-d * qk / (k * n)))
        - (qk / n) * (1 - 2 / ld) / ld ** (k - 1)
    )
    lower = (
        bk * ((1 - lam) - u_k1)
        - (qk / n) / ld ** (k - 1)
        - (qk1 / n) ** 2 * ld ** (3 - k)
    )
    return _report("(1+lam)dQ_k", state_id, lhs, lower, upper)


def verify_qj_bounds(x, j: int, params: Params, state_id: str = "", table=None) -> DriftReport:
    """Two-sided bound on (1+lam) Delta Q_j for 1 <= j <= k-1.

    The upper bound's external term is (1 - u_{j+1}(x)); for j <= k-2 that is
    dominated by Q_{j+1}/n (top weight 1) but for j = k-1 the top weight of
    Q_k is beta_k < 1, so substituting Q_k/n would undercut the true drift on
    states whose deficit sits entirely at level k.  The check therefore uses
    the sharp external term; the lower bound keeps the displayed Q_{j+1}/n
    form, which is valid for every j once lam d >= 4.
    """
    _require_k_ld(params)
    if not (1 <= j <= params.k - 1):
        raise ConfigurationError(f"need 1 <= j <= k-1, got {j}")
    table = table or coefficients(params)
    p = as_profile(x)
    n, lam, d, ld = p.n, params.lam, params.d, params.lambda_d
    qj = _weighted(p, table, j)
    qj1 = _weighted(p, table, j + 1)
    pk1 = float(sum(p.n - p.tail_count(i) for i in range(1, params.k)))
    lhs = (1.0 + lam) * exact_drift_q(p, j, params, table)
    ext_upper = (1.0 - _u(p, j + 1)) if j == params.k - 1 else qj1 / n
    upper = -ld * (qj / n) * (1 - 2 / math.sqrt(ld) - d * pk1 / n) + ext_upper
    lower = -ld * (qj / n) * (1 + 2 / math.sqrt(ld)) + qj1 / n
    return _report(f"(1+lam)dQ_{j}", state_id, lhs, lower, upper)


def verify_pk1_bound(x, params: Params, state_id: str = "", table=None) -> DriftReport:
    """Upper bound only on (1+lam) Delta P_{k-1}.

    External term is (1 - u_k(x)): the beta-weighted Q_k/n undercuts it by up
    to k (lam d)^-k (1-u_k) on states whose deficit sits entirely at level k,
    so the weighted form is not a valid upper bound there.
    """
    _require_k_ld(params)
    table = table or coefficients(params)
    p = as_profile(x)
    n, k, lam, d = p.n, params.k, params.lam, params.d
    pk1 = float(sum(p.n - p.tail_count(i) for i in range(1, k)))
    lhs = (1.0 + lam) * exact_drift_p(p, params, table)
    upper = -lam * (1 - math.exp(-d * pk1 / ((k - 1) * n))) + (1.0 - _u(p, k))
    return _report("(1+lam)dP_{k-1}", state_id, lhs, None, upper)


def _weighted(p: Profile, table: CoefficientTable, j: int) -> float:
    w = table.weights(j)
    return math.fsum(w[i - 1] * (p.n - p.tail_count(i)) for i in range(1, j + 1))


# ---------------------------------------------------------------------------
# refined bounds on D_1 (strict + audit modes)


@dataclass(frozen=True)
class AuditItem:
    description: str
    lhs: float
    rhs: float
    holds: bool


def d1_assumption_audit(params: Params, eps: float | None = None) -> list[AuditItem]:
    """The intermediate inequalities behind the refined D_1 drift bounds."""
    eps = params.eps if eps is None else eps
    k, lam, d, ld = params.k, params.lam, params.d, params.lambda_d
    items = [
        AuditItem(
            "2(1+2eps)/(lam d) <= eps/6",
            2 * (1 + 2 * eps) / ld, eps / 6,
            2 * (1 + 2 * eps) / ld <= eps / 6,
        ),
        AuditItem(
            "(1+5eps)^2 (1-lam)^2 (lam d)^(k-1) <= (eps/6)(1-lam)",
            (1 + 5 * eps) ** 2 * (1 - lam) ** 2 * ld ** (k - 1),
            (eps / 6) * (1 - lam),
            (1 + 5 * eps) ** 2 * (1 - lam) ** 2 * ld ** (k - 1) <= (eps / 6) * (1 - lam),
        ),
        AuditItem(
            "2/sqrt(lam d) <= eps/(50k)",
            2 / math.sqrt(ld), eps / (50 * k),
            2 / math.sqrt(ld) <= eps / (50 * k),
        ),
        AuditItem(
            "2(1-lam) d^(k-1) <= eps/(50k)",
            2 * (1 - lam) * d ** (k - 1), eps / (50 * k),
            2 * (1 - lam) * d ** (k - 1) <= eps / (50 * k),
        ),
    ]
    return items


def verify_D1_bounds(
    x,
    params: Params,
    eps: float | None = None,
    mode: str = "strict",
    state_id: str = "",
    ell: float | None = None,
    g: float | None = None,
):
    """Refined drift bounds valid on D_1 under the admissible regime.

    ``strict`` refuses (never passes vacuously) unless the regime check holds
    and x is a member of D_1; desk-scale parameters cannot satisfy the regime,
    so ``audit`` mode reports which intermediate inequalities hold instead.
    ``x`` may be a Profile/vector or a sequence of fractional deficits
    (1-u_1, ..., 1-u_{k+1}) for big-float evaluation without a concrete state.
    """
    eps = params.eps if eps is None else eps
    if mode == "audit":
        return d1_assumption_audit(params, eps)
    if mode != "strict":
        raise ConfigurationError(f"unknown mode {mode!r}")

    from .regime import regime_check

    report = regime_check(params.replace(eps=eps))
    if not report.overall:
        failed = ", ".join(q.ineq_id for q in report.failed())
        raise RegimeUnsatisfiedError(
            f"strict D_1 drift check refused: regime unsatisfied ({failed}); "
            "use mode='audit' for the per-inequality ledger"
        )
    return _verify_d1_deficits(x, params, eps, state_id, ell=ell, g=g)


def _verify_d1_deficits(x, params, eps, state_id, ell=None, g=None):
    """Big-float evaluation of the refined bounds on fractional deficits."""
    import mpmath as mp

    k, d = params.k, params.d
    if isinstance(x, (list, tuple, np.ndarray)):
        deficits = [mp.mpf(v) for v in x]
        if len(deficits) < k + 1:
            raise ConfigurationError("need deficits (1-u_1 .. 1-u_{k+1})")
    else:
        p = as_profile(x)
        deficits = [mp.mpf(p.n - p.tail_count(i)) / p.n for i in range(1, k + 2)]
    with mp.workdps(50):
        lam = mp.mpf(repr(params.lam))
        ld = lam * d
        beta = [mp.mpf(0)] + [1 - ld ** (-i) - (i - 1) * ld ** (-k) for i in range(1, k + 1)]
        gam = {
            (j, i): ld ** mp.mpf((j - i) / 2.0)
            * mp.sin(i * mp.pi / (j + 1)) / mp.sin(j * mp.pi / (j + 1))
            for j in range(1, k) for i in range(1, j + 1)
        }
        q = {}
        for j in range(1, k):
            q[j] = sum(gam[(j, i)] * deficits[i - 1] for i in range(1, j + 1))
        q[k] = sum(beta[i] * deficits[i - 1] for i in range(1, k + 1))
        scale = (1 - lam) * ld ** (k - 1)
        scale_km1 = (1 - lam) * ld ** (k - 2)
        in_d1 = (
            q[k] <= (1 + 2 * eps) * scale
            and q[k - 1] <= (1 + 5 * eps) * scale_km1
            and deficits[k] == 0  # u_{k+1} = 0 stand-in for the norm constraints
        )
        if not in_d1:
            raise RegimeUnsatisfiedError("strict D_1 check refused: state not in D_1")

        u = [1 - dv for dv in deficits]  # u_1..u_{k+1}
        u = [mp.mpf(1)] + u
        drift_u = [
            (lam * (u[i - 1] ** d - u[i] ** d) - (u[i] - u[i + 1]))
            for i in range(1, k + 1)
        ]
        lhs_k = -sum(beta[i] * drift_u[i - 1] for i in range(1, k + 1))
        u_k1 = u[k + 1]
        reports = []
        up = (
            beta[k] * (1 - lam - u_k1)
            - q[k] / ld ** (k - 1)
            + mp.e ** (-d * q[k] / k)
            + (eps / 6) * (1 - lam)
        )
        lo = beta[k] * (1 - lam - u_k1) - q[k] / ld ** (k - 1) - (eps / 6) * (1 - lam)
        reports.append(
            _report("(1+lam)dQ_k|D1", state_id, float(lhs_k), float(lo), float(up))
        )
        for j in range(1, k):
            lhs_j = -sum(gam[(j, i)] * drift_u[i - 1] for i in range(1, j + 1))
            up_j = -ld * q[j] * (1 - eps / (25 * k)) + q[j + 1]
            lo_j = -ld * q[j] * (1 + eps / (50 * k)) + q[j + 1]
            reports.append(
                _report(f"(1+lam)dQ_{j}|D1", state_id, float(lhs_j), float(lo_j), float(up_j))
            )
    return reports


# ---------------------------------------------------------------------------
# state sweeps


def sweep_states(params: Params, count: int, seed: int, max_len: int | None = None):
    """Adversarial battery plus random profiles, reproducibly seeded."""
    from .sets import random_profile

    n = params.n
    max_len = max_len or params.k + 4
    gen = np.random.default_rng(seed)
    states: list[tuple[str, Profile]] = []
    for c in range(max_len + 1):
        states.append((f"all-equal-{c}", Profile.all_at(n, c)))
    states.append(("staircase", random_profile(n, max_len, gen, "staircase")))
    states.append(("one-long", random_profile(n, 4 * max_len, gen, "one-long")))
    states.append(("empty", Profile.empty(n)))
    styles = ("multinomial", "uniform-lengths")
    i = 0
    while len(states) < count:
        style = styles[i % 2]
        states.append((f"{style}-{i}", random_profile(n, max_len, gen, style)))
        i += 1
    return states[:count]


def sweep_reports(params: Params, count: int, seed: int) -> list[DriftReport]:
    """Run every drift-bound check over the state battery."""
    table = coefficients(params)
    out = []
    for state_id, prof in sweep_states(params, count, seed):
        out.append(verify_qk_bounds(prof, params, state_id, table))
        for j in range(1, params.k):
            out.append(verify_qj_bounds(prof, j, params, state_id, table))
        out.append(verify_pk1_bound(prof, params, state_id, table))
    return out


# ---------------------------------------------------------------------------
# Monte Carlo consistency gate


@dataclass(frozen=True)
class MonteCarloDrift:
    functional: str
    estimate: float
    stderr: float
    exact: float

    @property
    def consistent(self) -> bool:
        return abs(self.estimate - self.exact) <= 4.0 * self.stderr


def montecarlo_drift(
    x,
    functional: str,
    params: Params,
    trials: int,
    seed: int,
) -> MonteCarloDrift:
    """Empirical mean one-step change over independent single steps from x.

    ``functional`` is one of 'u:<i>', 'Q:<j>', 'P', 'mass'.
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    p = as_profile(x)
    n, d, lam = p.n, params.d, params.lam
    gen = np.random.default_rng(seed)
    tails = p.tail_counts(max(p.max_length() + 2, params.k + 2))
    u = tails / n
    levels = len(tails)

    u1 = gen.random(trials)
    u2 = gen.random(trials)
    arrivals = u1 < lam / (1 + lam)
    upow = u**d
    # arrival level J: largest j with u2 <= u_j^d; since upow is non-increasing
    # J = (number of levels j >= 1 with upow[j] >= u2)
    J = (u2[:, None] <= upow[None, 1:]).sum(axis=1)
    # departure level I: largest i with u2 * n < tail_i
    I = (u2[:, None] * n < tails[None, 1:]).sum(axis=1)

    if functional.startswith("u:"):
        i = int(functional.split(":")[1])
        delta = np.where(
            arrivals, (J == i - 1) / n, np.where(I == i, -1.0 / n, 0.0)
        )
        exact = exact_drift_u(p, i, params)
        name = f"u_{i}"
    elif functional.startswith("Q:"):
        j = int(functional.split(":")[1])
        table = coefficients(params)
        w = np.zeros(levels)
        ws = table.weights(j)
        w[1 : j + 1] = ws
        # arrival at level J raises u_{J+1}: Q_j loses w[J+1]; departure at I
        # lowers u_I: Q_j gains w[I]
        wj = np.concatenate([w, [0.0]])
        delta = np.where(arrivals, -wj[np.minimum(J + 1, levels)], wj[I])
        exact = exact_drift_q(p, j, params, table)
        name = f"Q_{j}"
    elif functional == "P":
        table = coefficients(params)
        w = np.zeros(levels)
        w[1 : params.k] = 1.0
        wj = np.concatenate([w, [0.0]])
        delta = np.where(arrivals, -wj[np.minimum(J + 1, levels)], wj[I])
        exact = exact_drift_p(p, params, table)
        name = "P"
    elif functional == "mass":
        delta = np.where(arrivals, 1.0, np.where(I >= 1, -1.0, 0.0))
        exact = exact_drift_mass(p, params)
        name = "mass"
    else:
        raise ConfigurationError(f"unknown functional {functional!r}")

    est = float(delta.mean())
    se = float(delta.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    return MonteCarloDrift(functional=name, estimate=est, stderr=se, exact=exact)
