"""State-space set predicates: the good set N, the functional ledger A..H, I, and
the center P used by the path construction.

Every predicate takes epsilon explicitly (the ledger is reused at eps, 3 eps,
6 eps).  Membership is evaluated literally, one defining inequality at a time,
on exact integer deficit counts against float thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .coefficients import CoefficientTable, coefficients
from .errors import ConfigurationError
from .functionals import all_q, as_profile, deficit_counts, p_functional
from .params import Params
from .profile import Profile

LEDGER_IDS = (
    "A0", "A1", "B0", "B1", "C0", "C1", "D0", "D1", "E0", "E1", "G0", "G1", "H",
)
SET_IDS = ("N", "Hred", "Ired", "P", "I") + LEDGER_IDS


def ell_star(params: Params) -> float:
    return math.log(params.n) ** 2 / (1.0 - params.lam)


def g_star(params: Params) -> float:
    return 2.0 / (1.0 - params.lam)


def center_tail_counts(params: Params) -> np.ndarray:
    """tail*_j = floor(n (1 - (1-lam)(lam d)^(j-1))) for j = 1..k.

    Evaluated in 50-digit decimal so boundaries like n(1-lam) = integer land
    where the decimal parameters say they should.
    """
    n, k = params.n, params.k
    with mp.workdps(50):
        lam = mp.mpf(repr(params.lam))
        ld = lam * params.d
        tails = []
        for j in range(1, k + 1):
            v = n * (1 - (1 - lam) * ld ** (j - 1))
            tails.append(int(mp.floor(v)))
    if any(tails[i] < tails[i + 1] for i in range(len(tails) - 1)) or tails[-1] < 0:
        raise ConfigurationError("center is not a valid profile at these parameters")
    return np.asarray(tails, dtype=np.int64)


def center_profile(params: Params) -> Profile:
    """The center P of the good set: u_j = u*_j for j = 1..k, u_{k+1} = 0."""
    return Profile.from_tail_counts(params.n, center_tail_counts(params))


@dataclass
class _Ctx:
    params: Params
    eps: float
    table: CoefficientTable | None  # None when k = 1 (functional ledger undefined)
    profile: Profile
    q: list[float] | None
    p: float | None
    deficits: np.ndarray  # n(1-u_j) for j = 1..k+1
    ell: float
    g: float

    def scale(self, j: int) -> float:
        return self.params.level_scale(j)

    def u_k1(self) -> float:
        return (self.params.n - self.deficits[self.params.k]) / self.params.n


def _ctx(x, params: Params, eps: float, ell, g) -> _Ctx:
    p = as_profile(x)
    if p.n != params.n:
        raise ConfigurationError(f"profile has n = {p.n}, params n = {params.n}")
    table = coefficients(params) if params.k >= 2 else None
    return _Ctx(
        params=params,
        eps=eps,
        table=table,
        profile=p,
        q=all_q(p, table) if table is not None else None,
        p=p_functional(p, table) if table is not None else None,
        deficits=deficit_counts(p, params.k + 1),
        ell=ell if ell is not None else ell_star(params),
        g=g if g is not None else g_star(params),
    )


def _in_N(c: _Ctx) -> bool:
    k, n = c.params.k, c.params.n
    if c.profile.tail_count(k + 1) != 0:
        return False
    for j in range(1, k + 1):
        dj = c.deficits[j - 1]
        s = c.scale(j)
        if not ((1 - 5 * c.eps) * s <= dj <= (1 + 5 * c.eps) * s):
            return False
    return True


def _in_Hred(c: _Ctx) -> bool:
    k = c.params.k
    if c.profile.tail_count(k + 1) != 0:
        return False
    if c.q[k - 1] > (1 + 2 * c.eps) * c.scale(k):
        return False
    for j in range(1, k + 1):
        lo = (1 - (4 + (k - j) / k) * c.eps) * c.scale(j)
        if c.q[j - 1] < lo:
            return False
    for j in range(1, k):
        hi = (1 + (4 + (k - j) / k) * c.eps) * c.scale(j)
        if c.q[j - 1] > hi:
            return False
    return True


def _in_Ired(c: _Ctx) -> bool:
    k = c.params.k
    if c.profile.tail_count(k + 1) != 0:
        return False
    if not ((1 - 3 * c.eps) * c.scale(k) <= c.q[k - 1] <= (1 + c.eps) * c.scale(k)):
        return False
    for j in range(1, k):
        coef = (4 + (k - j - 0.5) / k) * c.eps
        if not ((1 - coef) * c.scale(j) <= c.q[j - 1] <= (1 + coef) * c.scale(j)):
            return False
    return True


def _in_P(c: _Ctx) -> bool:
    if c.profile.tail_count(c.params.k + 1) != 0:
        return False
    stars = center_tail_counts(c.params)
    for j in range(1, c.params.k + 1):
        if c.profile.tail_count(j) != int(stars[j - 1]):
            return False
    return True


def _in_A(c: _Ctx, loose: bool) -> bool:
    f = 3.0 if loose else 1.0
    return (
        c.profile.norminf() <= f * c.ell
        and c.profile.norm1() <= f * c.g * c.params.n
    )


def _in_B(c: _Ctx, loose: bool) -> bool:
    coef = (1 + 2 * c.eps) if loose else (1 + c.eps)
    return c.q[c.params.k - 1] <= coef * c.scale(c.params.k) and _in_A(c, loose=True)


def _in_C(c: _Ctx, loose: bool) -> bool:
    coef = 3.0 if loose else 2.0
    k = c.params.k
    return c.p <= coef * k * c.scale(k - 1) and _in_B(c, loose=True)


def _in_D(c: _Ctx, loose: bool) -> bool:
    coef = (1 + 5 * c.eps) if loose else (1 + 4 * c.eps)
    k = c.params.k
    return c.q[k - 2] <= coef * c.scale(k - 1) and _in_C(c, loose=True)


def _in_E(c: _Ctx, loose: bool) -> bool:
    coef = (1 - 4 * c.eps) if loose else (1 - 3 * c.eps)
    k = c.params.k
    return (
        c.u_k1() <= c.eps * (1 - c.params.lam)
        and c.q[k - 1] >= coef * c.scale(k)
        and _in_D(c, loose=True)
    )


def _in_G(c: _Ctx, j: int, loose: bool) -> bool:
    k = c.params.k
    if not (1 <= j <= k - 1):
        raise ConfigurationError(f"G sets need 1 <= j <= k-1, got j = {j}")
    # chain: G^j requires G^{j+1}_1, with G^k_1 = E_1
    if j + 1 <= k - 1:
        if not _in_G(c, j + 1, loose=True):
            return False
    else:
        if not _in_E(c, loose=True):
            return False
    shift = (k - j - 0.5) / k if not loose else (k - j) / k
    coef = (4 + shift) * c.eps
    s = c.scale(j)
    return (1 - coef) * s <= c.q[j - 1] <= (1 + coef) * s


def _in_H_chain(c: _Ctx) -> bool:
    if c.profile.tail_count(c.params.k + 1) != 0:
        return False
    if c.params.k >= 2:
        return _in_G(c, 1, loose=True)
    return _in_E(c, loose=True)


def _in_I_full(c: _Ctx) -> bool:
    cs = _Ctx(**{**c.__dict__, "ell": ell_star(c.params), "g": g_star(c.params)})
    ok = _in_A(cs, loose=False) and _in_B(c, False) and _in_C(c, False)
    ok = ok and _in_D(c, False) and _in_E(c, False)
    for j in range(c.params.k - 1, 0, -1):
        ok = ok and _in_G(c, j, loose=False)
    return ok and _in_H_chain(c)


def set_membership(
    x,
    set_id: str,
    params: Params,
    eps: float | None = None,
    ell: float | None = None,
    g: float | None = None,
    j: int | None = None,
) -> bool:
    """Literal evaluation of the defining inequalities of one set.

    ``Hred``/``Ired`` are the redundancy-free forms; ``H`` is the ledger chain
    {u_{k+1} = 0} within G_1^1 (provably the same set as ``Hred``; both kept so
    the equivalence is testable).  ``I`` is the full intersection including
    A0(ell*, g*).
    """
    eps = params.eps if eps is None else eps
    c = _ctx(x, params, eps, ell, g)
    if set_id not in SET_IDS:
        raise ConfigurationError(f"unknown set id {set_id!r}")
    if c.table is None and set_id not in ("N", "P", "A0", "A1"):
        raise ConfigurationError(f"set {set_id!r} needs k >= 2 (functional ledger)")
    if set_id == "N":
        return _in_N(c)
    if set_id == "Hred":
        return _in_Hred(c)
    if set_id == "Ired":
        return _in_Ired(c)
    if set_id == "P":
        return _in_P(c)
    if set_id == "A0":
        return _in_A(c, loose=False)
    if set_id == "A1":
        return _in_A(c, loose=True)
    if set_id == "B0":
        return _in_B(c, loose=False)
    if set_id == "B1":
        return _in_B(c, loose=True)
    if set_id == "C0":
        return _in_C(c, loose=False)
    if set_id == "C1":
        return _in_C(c, loose=True)
    if set_id == "D0":
        return _in_D(c, loose=False)
    if set_id == "D1":
        return _in_D(c, loose=True)
    if set_id == "E0":
        return _in_E(c, loose=False)
    if set_id == "E1":
        return _in_E(c, loose=True)
    if set_id == "G0":
        if j is None:
            raise ConfigurationError("G sets need j")
        return _in_G(c, j, loose=False)
    if set_id == "G1":
        if j is None:
            raise ConfigurationError("G sets need j")
        return _in_G(c, j, loose=True)
    if set_id == "H":
        return _in_H_chain(c)
    if set_id == "I":
        return _in_I_full(c)
    raise ConfigurationError(f"unknown set id {set_id!r}")


# ---------------------------------------------------------------------------
# samplers used by tests, the path experiments and the CLI


def n_deficit_bounds(params: Params, eps: float, j: int) -> tuple[int, int]:
    """Integer range of n(1-u_j) admissible in N^eps."""
    s = params.level_scale(j)
    lo = math.ceil((1 - 5 * eps) * s)
    hi = math.floor((1 + 5 * eps) * s)
    return lo, hi


def sample_profile_in_N(
    params: Params, eps: float, rng: np.random.Generator
) -> Profile:
    """Uniform-ish independent level deficits inside N^eps (then validated)."""
    n, k = params.n, params.k
    deficits = []
    prev = 0
    for j in range(1, k + 1):
        lo, hi = n_deficit_bounds(params, eps, j)
        lo = max(lo, prev)
        hi = min(hi, n)  # a deficit count never exceeds n
        if lo > hi:
            raise ConfigurationError(
                f"N^eps admits no profile at level {j} (range [{lo},{hi}])"
            )
        dj = int(rng.integers(lo, hi + 1))
        deficits.append(dj)
        prev = dj
    tails = [n - dj for dj in deficits]
    prof = Profile.from_tail_counts(n, tails)
    assert set_membership(prof, "N", params, eps=eps)
    return prof


def random_profile(
    n: int, max_len: int, rng: np.random.Generator, style: str = "multinomial"
) -> Profile:
    """Assorted random and adversarial profile generators for sweeps."""
    if style == "multinomial":
        probs = rng.dirichlet(np.ones(max_len + 1))
        counts = rng.multinomial(n, probs)
        return Profile(counts)
    if style == "uniform-lengths":
        return Profile.from_lengths(rng.integers(0, max_len + 1, size=n))
    if style == "all-equal":
        return Profile.all_at(n, int(rng.integers(0, max_len + 1)))
    if style == "staircase":
        lengths = np.arange(n) % (max_len + 1)
        return Profile.from_lengths(lengths)
    if style == "one-long":
        lengths = np.zeros(n, dtype=np.int64)
        lengths[0] = max_len
        return Profile.from_lengths(lengths)
    raise ConfigurationError(f"unknown style {style!r}")


ADVERSARIAL_STYLES = ("all-equal", "staircase", "one-long")
