"""Synthetic random-walk harness validating the tail bounds that power the
hitting/exit analysis: downward-drift hitting times, crossings against the
drift, band excursions, biased return times, and the lower Chernoff bound for
binomial/Poisson variables.

Each experiment reports (empirical, bound, stderr) plus an exact oracle
(dynamic programming over the finite lattice, or a closed form) so the bound
is checked against truth, not just Monte Carlo noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigurationError

_CHUNK = 1 << 14


@dataclass(frozen=True)
class WalkSpec:
    """Walk with jumps in [-1, 1] and conditional drift at most -v.

    law: 'pm1'  P(-1) = (1+v)/2, P(+1) = (1-v)/2   (integer lattice)
         'det'  Z = -v surely
    Hitting experiments use (r0, r1, m); crossing/band experiments use
    (h0, a, b) and optionally rho/s.  ``drift_off_below`` disables the drift
    (fair +-1) strictly below h0 - drift_off_below and declares the good
    event failed from then on.
    """

    v: float
    m: int
    law: str = "pm1"
    r0: float = 0.0
    r1: float = 0.0
    h0: float = 0.0
    a: int | None = None
    b: int | None = None
    rho: float | None = None
    s: int | None = None
    drift_off_below: int | None = None


@dataclass(frozen=True)
class Verdict:
    experiment: str
    bound: float
    empirical: float
    stderr: float
    oracle: float | None
    ok_bound: bool       # empirical <= bound + 3 stderr
    ok_oracle: bool      # |empirical - oracle| <= 4 sigma, and oracle <= bound

    def row(self) -> list:
        return [
            self.experiment,
            repr(self.bound),
            repr(self.empirical),
            "" if self.oracle is None else repr(self.oracle),
            "ok" if (self.ok_bound and self.ok_oracle) else "VIOLATION",
        ]


CSV_HEADER = ["experiment-id", "bound", "empirical", "exact-oracle", "verdict"]


def _binom_se(p_hat: float, trials: int) -> float:
    p = min(max(p_hat, 1.0 / trials), 1 - 1.0 / trials)
    return math.sqrt(p * (1 - p) / trials)


def _verdict(name, bound, emp, trials, oracle) -> Verdict:
    se = _binom_se(emp, trials)
    ok_b = emp <= bound + 3 * se
    ok_o = True
    if oracle is not None:
        ok_o = abs(emp - oracle) <= 4 * max(se, 1e-12) and oracle <= bound * (1 + 1e-12) + 1e-15
    return Verdict(name, bound, emp, se, oracle, ok_b, ok_o)


# ---------------------------------------------------------------------------
# hitting a lower level (failure probability exp(-v^2 m / 8))


def hitting_bound_experiment(spec: WalkSpec, trials: int, seed: int) -> Verdict:
    """P(R_t > r1 for all t <= m) <= exp(-v^2 m / 8), started at r0."""
    v, m = spec.v, spec.m
    gap = spec.r0 - spec.r1
    if v * m < 2 * gap:
        raise ConfigurationError(f"need v m >= 2 (r0 - r1): {v * m} < {2 * gap}")
    bound = math.exp(-(v**2) * m / 8)
    if spec.law == "det":
        # deterministic drift hits after gap/v steps; no randomness at all
        fail = 1.0 if gap / v > m else 0.0
        return _verdict("hitting/det", bound, fail, trials, fail)
    if spec.law != "pm1":
        raise ConfigurationError(f"unsupported law {spec.law!r}")
    gap_i = int(math.ceil(gap))
    p_down = (1 + v) / 2
    gen = np.random.default_rng(seed)
    fails = 0
    done = 0
    while done < trials:
        c = min(_CHUNK, trials - done)
        jumps = np.where(gen.random((c, m)) < p_down, -1, 1).astype(np.int32)
        pos = np.cumsum(jumps, axis=1)
        fails += int(np.sum(pos.min(axis=1) > -gap_i))
        done += c
    emp = fails / trials
    oracle = _dp_stay_above(p_down, gap_i, m)
    return _verdict(f"hitting/pm1 v={v} m={m} gap={gap_i}", bound, emp, trials, oracle)


def _dp_stay_above(p_down: float, gap: int, m: int) -> float:
    """Exact P(never reach -gap in m steps) for the +-1 walk from 0."""
    # positions -gap+1 .. m (absorbing at <= -gap); offset so index 0 = -gap+1
    width = gap + m + 1
    prob = np.zeros(width)
    prob[gap - 1] = 1.0  # position 0
    p_up = 1 - p_down
    for _ in range(m):
        nxt = np.zeros_like(prob)
        nxt[:-1] += prob[1:] * p_down  # index 0 stepping down leaves the grid
        nxt[1:] += prob[:-1] * p_up
        prob = nxt
    return float(prob.sum())


# ---------------------------------------------------------------------------
# crossing against the drift (exp(-2 v a))


def crossing_bound_experiment(spec: WalkSpec, trials: int, seed: int) -> Verdict:
    """P(good event and first band exit is at the top) <= exp(-2 v a)."""
    if spec.a is None or spec.b is None:
        raise ConfigurationError("crossing needs a and b")
    v, a, b = spec.v, int(spec.a), int(spec.b)
    if not (0 < v <= 1) or a <= 0 or b <= 0:
        raise ConfigurationError("need v in (0,1], a, b > 0")
    bound = math.exp(-2 * v * a)
    bp = spec.drift_off_below
    p_down = (1 + v) / 2
    gen = np.random.default_rng(seed)
    top = 0
    done = 0
    horizon = int(50 * (a + b) / v) + 200
    while done < trials:
        c = min(_CHUNK, trials - done)
        pos = np.zeros(c, dtype=np.int32)
        active = np.ones(c, dtype=bool)
        good = np.ones(c, dtype=bool)
        for _ in range(horizon):
            if not active.any():
                break
            u = gen.random(c)
            drifted = active.copy()
            if bp is not None:
                drifted &= pos >= -bp
            fair = active & ~drifted
            jump = np.zeros(c, dtype=np.int32)
            jump[drifted] = np.where(u[drifted] < p_down, -1, 1)
            jump[fair] = np.where(u[fair] < 0.5, -1, 1)
            pos[active] += jump[active]
            if bp is not None:
                # once the good event fails the path can never count: retire it
                failed = active & (pos < -bp)
                good &= ~failed
                active &= ~failed
            exited_top = active & (pos >= a)
            exited_bot = active & (pos <= -b)
            top += int(np.sum(exited_top & good))
            active &= ~(exited_top | exited_bot)
        if active.any():
            raise RuntimeError("crossing horizon exhausted; increase horizon")
        done += c
    emp = top / trials
    oracle = _crossing_oracle(v, a, b, bp)
    name = f"crossing v={v} a={a} b={b}" + ("" if bp is None else f" bp={bp}")
    return _verdict(name, bound, emp, trials, oracle)


def gamblers_ruin_top(v: float, a: int, b: int) -> float:
    """Closed form P(hit +a before -b) for the +-1 walk with down prob (1+v)/2."""
    rho = (1 + v) / (1 - v)
    return (rho**b - 1) / (rho ** (a + b) - 1)


def _crossing_oracle(v: float, a: int, b: int, bp: int | None) -> float:
    if bp is None:
        return gamblers_ruin_top(v, a, b)
    # absorbing at >= a (success) and < -bp (good event fails); linear solve
    lo = -bp
    width = a - lo  # states lo .. a-1
    p_down = (1 + v) / 2
    A = np.zeros((width, width))
    rhs = np.zeros(width)
    for i, x in enumerate(range(lo, a)):
        A[i, i] = 1.0
        up, down = 1 - p_down, p_down
        if x + 1 >= a:
            rhs[i] += up
        else:
            A[i, i + 1] -= up
        if x - 1 >= lo:
            A[i, i - 1] -= down
        # x - 1 < lo: good event fails, contributes 0
    sol = np.linalg.solve(A, rhs)
    return float(sol[-lo])  # start position 0 is index -lo


# ---------------------------------------------------------------------------
# band lemma: reach h within m, then no crossing to h + rho within s


def drifts_down_experiment(spec: WalkSpec, trials: int, seed: int) -> tuple[Verdict, Verdict]:
    """Parts (i) and (ii): hit h from c within m; then stay below h + rho."""
    if spec.rho is None or spec.s is None:
        raise ConfigurationError("band experiment needs rho and s")
    v, m, rho, s = spec.v, spec.m, spec.rho, int(spec.s)
    if rho < 2:
        raise ConfigurationError("need rho >= 2")
    c_start = spec.r0
    h = spec.r1
    if v * m < 2 * (c_start - h):
        raise ConfigurationError("need v m >= 2 (c - h)")
    part1 = hitting_bound_experiment(
        WalkSpec(v=v, m=m, law=spec.law, r0=c_start, r1=h), trials, seed
    )
    part1 = Verdict(
        "drifts-down(i) " + part1.experiment, part1.bound, part1.empirical,
        part1.stderr, part1.oracle, part1.ok_bound, part1.ok_oracle,
    )

    # part (ii): start at h; drift -v inside [h, h+rho); deterministic +1 below
    # h (adversarial: no drift constraint there); absorb at >= h + rho.
    rho_i = int(math.ceil(rho))
    bound2 = s * math.exp(-rho * v)
    p_down = (1 + v) / 2
    gen = np.random.default_rng(seed + 1)
    crossed = 0
    done = 0
    while done < trials:
        c = min(_CHUNK, trials - done)
        pos = np.zeros(c, dtype=np.int32)  # relative to h
        hit = np.zeros(c, dtype=bool)
        for _ in range(s):
            u = gen.random(c)
            below = pos < 0
            jump = np.where(u < p_down, -1, 1).astype(np.int32)
            jump[below] = 1
            pos = np.where(hit, pos, pos + jump)
            hit |= pos >= rho_i
        crossed += int(hit.sum())
        done += c
    emp2 = crossed / trials
    oracle2 = _band_cross_oracle(p_down, rho_i, s)
    part2 = _verdict(
        f"drifts-down(ii) v={v} rho={rho_i} s={s}",
        min(bound2, 1.0), emp2, trials, oracle2,
    )
    return part1, part2


def _band_cross_oracle(p_down: float, rho: int, s: int) -> float:
    """Exact P(reach rho within s) for the band walk (refect +1 below 0)."""
    width = rho + 1  # positions -1 .. rho-1; index = pos + 1
    prob = np.zeros(width)
    prob[1] = 1.0
    p_up = 1 - p_down
    absorbed = 0.0
    for _ in range(s):
        nxt = np.zeros_like(prob)
        nxt[2:] += prob[1:-1] * p_up
        absorbed += prob[-1] * p_up   # top index stepping up reaches rho
        nxt[:-1] += prob[1:] * p_down
        nxt[1] += prob[0]            # below h: deterministic +1 back to h
        prob = nxt
    return float(absorbed)


# ---------------------------------------------------------------------------
# biased return time


@dataclass(frozen=True)
class ReturnWalkSpec:
    delta: float          # P(down) >= delta below k0 (we simulate equality)
    k0: int
    s0: int
    m: int
    p_zero: float = 0.0   # probability of a 0 jump below k0
    cap: int | None = None  # good-event ceiling: A_i = {S_i <= cap}


def return_time_experiment(rspec: ReturnWalkSpec, trials: int, seed: int) -> Verdict:
    """P(no return to 0 within m, all good events hold) against the bound
    Pr(S0 > floor(m/16)) + 3 exp(-delta^(k0-1) m / (200 k0))."""
    delta, k0, m, s0 = rspec.delta, rspec.k0, rspec.m, rspec.s0
    if not (0 < delta < 0.5):
        raise ConfigurationError("need 0 < delta < 1/2")
    bound = (0.0 if s0 <= m // 16 else 1.0) + 3 * math.exp(
        -(delta ** (k0 - 1)) * m / (200 * k0)
    )
    bound = min(bound, 1.0)
    cap = rspec.cap
    p_dn_low, p_zero = delta, rspec.p_zero
    p_up_low = 1 - delta - p_zero
    if p_up_low < 0:
        raise ConfigurationError("p_zero too large")
    gen = np.random.default_rng(seed)
    no_hit = 0
    done = 0
    while done < trials:
        c = min(_CHUNK, trials - done)
        pos = np.full(c, s0, dtype=np.int32)
        alive = pos > 0
        good = np.ones(c, dtype=bool)
        for _ in range(m):
            if not alive.any():
                break
            u = gen.random(c)
            low = pos < k0
            jump = np.zeros(c, dtype=np.int32)
            jump[low] = np.where(
                u[low] < p_dn_low, -1, np.where(u[low] < p_dn_low + p_zero, 0, 1)
            )
            jump[~low] = np.where(u[~low] < 0.75, -1, 1)
            pos = np.where(alive, pos + jump, pos)
            if cap is not None:
                good &= ~(alive & (pos > cap))
            alive &= pos > 0
        no_hit += int(np.sum(alive & good))
        done += c
    emp = no_hit / trials
    oracle = _return_oracle(rspec)
    return _verdict(
        f"return-time delta={delta} k0={k0} m={m} s0={s0}", bound, emp, trials, oracle
    )


def _return_oracle(rspec: ReturnWalkSpec) -> float | None:
    """Exact P(alive and good after m steps); exact when capped, else None
    unless the implied excursion above 4 k0 + 60 is negligible (truncated DP
    whose mass loss is tracked and required < 1e-13)."""
    cap = rspec.cap
    trunc = cap if cap is not None else max(4 * rspec.k0 + 60, rspec.s0 + 60)
    width = trunc + 1
    prob = np.zeros(width)
    if rspec.s0 > trunc:
        return None
    prob[rspec.s0] = 1.0
    delta, p_zero = rspec.delta, rspec.p_zero
    p_up_low = 1 - delta - p_zero
    lost = 0.0
    for _ in range(rspec.m):
        nxt = np.zeros_like(prob)
        idx = np.arange(width)
        low = idx < rspec.k0
        high = ~low
        # down moves
        nxt[: width - 1] += np.where(low[1:], delta, 0.75) * prob[1:]
        # up moves
        up_p = np.where(low, p_up_low, 0.25) * prob
        nxt[1:] += up_p[:-1]
        lost += up_p[-1]  # walked above the truncation
        # zero moves
        nxt += np.where(low, p_zero, 0.0) * prob
        nxt[0] = 0.0  # absorbed at 0
        prob = nxt
    if cap is None and lost > 1e-13:
        return None
    return float(prob.sum())


# ---------------------------------------------------------------------------
# lower Chernoff tail for binomial / Poisson


def default_grid(trials: int, seed: int) -> list[Verdict]:
    """The full acceptance grid: every lemma-style experiment with its oracle."""
    out = []
    out.append(
        hitting_bound_experiment(WalkSpec(v=0.5, m=400, law="det", r0=100, r1=0), trials, seed)
    )
    out.append(
        hitting_bound_experiment(WalkSpec(v=0.2, m=2000, r0=100, r1=0), trials, seed + 1)
    )
    out.append(
        hitting_bound_experiment(WalkSpec(v=0.999, m=10, r0=1, r1=0), trials, seed + 2)
    )
    out.append(crossing_bound_experiment(WalkSpec(v=0.1, m=0, a=20, b=20), trials, seed + 3))
    out.append(crossing_bound_experiment(WalkSpec(v=0.2, m=0, a=10, b=10), trials, seed + 4))
    out.append(
        crossing_bound_experiment(
            WalkSpec(v=0.1, m=0, a=20, b=20, drift_off_below=5), trials, seed + 5
        )
    )
    p1, p2 = drifts_down_experiment(
        WalkSpec(v=0.3, m=200, r0=20, r1=0, rho=10, s=1000), trials, seed + 6
    )
    out += [p1, p2]
    _, p2b = drifts_down_experiment(
        WalkSpec(v=0.3, m=200, r0=20, r1=0, rho=30, s=1000), trials, seed + 7
    )
    out.append(p2b)
    out.append(
        return_time_experiment(ReturnWalkSpec(delta=0.4, k0=3, s0=5, m=10_000), trials, seed + 8)
    )
    out.append(
        return_time_experiment(ReturnWalkSpec(delta=0.4, k0=1, s0=5, m=2000), trials, seed + 9)
    )
    out.append(
        return_time_experiment(
            ReturnWalkSpec(delta=0.3, k0=3, s0=5, m=10_000, cap=40), trials, seed + 10
        )
    )
    vb, vp = chernoff_check(300.0, 0.2, trials, seed + 11, n_binom=1000)
    out += [vb, vp]
    vb2, vp2 = chernoff_check(50.0, 0.5, trials, seed + 12)
    out += [vb2, vp2]
    return out


def chernoff_check(
    mu: float, eps: float, trials: int, seed: int, n_binom: int | None = None
) -> tuple[Verdict, Verdict]:
    """P(Z <= (1-eps) mu) <= exp(-eps^2 mu / 2) for binomial and Poisson Z."""
    if not (0 <= eps <= 1):
        raise ConfigurationError("need 0 <= eps <= 1")
    bound = math.exp(-(eps**2) * mu / 2)
    thr = math.floor((1 - eps) * mu)
    if n_binom is None:
        n_binom = max(int(math.ceil(4 * mu)), 1)
    p = mu / n_binom
    gen = np.random.default_rng(seed)
    zb = gen.binomial(n_binom, p, size=trials)
    zp = gen.poisson(mu, size=trials)
    emp_b = float(np.mean(zb <= thr))
    emp_p = float(np.mean(zp <= thr))
    exact_b = float(stats.binom.cdf(thr, n_binom, p))
    exact_p = float(stats.poisson.cdf(thr, mu))
    vb = _verdict(f"chernoff/binomial mu={mu} eps={eps}", bound, emp_b, trials, exact_b)
    vp = _verdict(f"chernoff/poisson mu={mu} eps={eps}", bound, emp_p, trials, exact_p)
    return vb, vp
