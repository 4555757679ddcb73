"""Full queue-vector engine: shared-randomness coupling, coalescence, relaxation.

All coupled copies consume the same tape (V_t, D_t, D~_t); a copy's update is a
deterministic function of (state, tape event).  The d candidate indices are
streamed, keeping only the running first minimum, so d can be 1e7 without
materializing the tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng
from .errors import ConfigurationError
from .params import Params
from .profile import Profile


class QueueVector:
    """Length vector of the n queues."""

    __slots__ = ("lengths",)

    def __init__(self, lengths):
        a = np.asarray(lengths, dtype=np.int64)
        if a.ndim != 1 or np.any(a < 0):
            raise ConfigurationError("lengths must be a 1-d non-negative array")
        self.lengths = a.copy()

    @classmethod
    def empty(cls, n: int) -> "QueueVector":
        return cls(np.zeros(n, dtype=np.int64))

    @classmethod
    def from_profile(cls, profile: Profile, order: str = "descending") -> "QueueVector":
        lengths = np.repeat(
            np.arange(len(profile.counts), dtype=np.int64), profile.counts
        )
        if order == "descending":
            lengths = lengths[::-1].copy()
        return cls(lengths)

    @property
    def n(self) -> int:
        return len(self.lengths)

    def profile(self) -> Profile:
        return Profile.from_lengths(self.lengths)

    def norm1(self) -> int:
        return int(self.lengths.sum())

    def norminf(self) -> int:
        return int(self.lengths.max(initial=0))

    def copy(self) -> "QueueVector":
        return QueueVector(self.lengths)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QueueVector):
            return NotImplemented
        return np.array_equal(self.lengths, other.lengths)

    def __le__(self, other: "QueueVector") -> bool:
        return bool(np.all(self.lengths <= other.lengths))

    def __repr__(self) -> str:
        return f"QueueVector({self.lengths.tolist()})"


@dataclass(frozen=True)
class TapeEvent:
    t: int
    arrival: bool
    dtilde: int          # departure target (used when not arrival)
    _tape: "RandomTape" = field(repr=False)

    def choices(self):
        """Lazily stream the ordered d-tuple of candidate queue indices."""
        return self._tape.choice_stream(self.t)


class RandomTape:
    """The three coupled randomness streams, addressable by step t.

    V_t ~ Bernoulli(lam/(1+lam)); D~_t uniform on queues; D_t an ordered
    d-tuple of uniform-with-replacement queue indices.  Everything regenerates
    from (seed, t) alone.
    """

    def __init__(self, seed: int, params: Params):
        self.seed = seed
        self.params = params

    def event(self, t: int) -> TapeEvent:
        u = rng.uniform(self.seed, rng.STREAM_EVENT, t)
        arrival = u < self.params.arrival_prob
        dtilde = rng.index(self.seed, rng.STREAM_TARGET, t, self.params.n)
        return TapeEvent(t=t, arrival=arrival, dtilde=dtilde, _tape=self)

    def choice_stream(self, t: int):
        n, d = self.params.n, self.params.d
        seed = self.seed
        for i in range(d):
            yield rng.index(seed, rng.STREAM_CHOICE, t, n, i)


def step_vector(x: QueueVector, event: TapeEvent) -> QueueVector:
    """Apply one tape event; returns a new vector (input untouched).

    Arrival joins the first queue in D_t attaining the minimal length among
    the listed candidates; a potential departure serves D~_t if non-empty.
    """
    out = x.copy()
    apply_event_inplace(out, event)
    return out


def apply_event_inplace(x: QueueVector, event: TapeEvent) -> int:
    """Returns the index of the modified queue, or -1 for an idle step."""
    lengths = x.lengths
    if event.arrival:
        best_q = -1
        best_len = None
        for q in event.choices():
            lq = lengths[q]
            if best_len is None or lq < best_len:
                best_len = lq
                best_q = q
        lengths[best_q] += 1
        return best_q
    q = event.dtilde
    if lengths[q] > 0:
        lengths[q] -= 1
        return q
    return -1


# ---------------------------------------------------------------------------
# coupled runs


@dataclass
class CoupledRun:
    params: Params
    seed: int
    horizon: int
    states: list[QueueVector]
    l1: np.ndarray        # [pairs, T+1] pairwise l1 distance series
    linf: np.ndarray
    coalesce_t: np.ndarray  # [pairs], -1 censored
    w_series: np.ndarray | None  # longer unbalanced queue length, adjacent runs
    pair_index: list[tuple[int, int]]


def run_coupled(
    states: list[QueueVector],
    params: Params,
    seed: int,
    horizon: int,
    record_w: bool = False,
) -> CoupledRun:
    """Drive all copies from one tape, recording pairwise distance series.

    Python-loop implementation for modest horizons; the acceptance sweeps use
    the numba kernel (`coupled_pairs_batch`).
    """
    if not states:
        raise ConfigurationError("need at least one state")
    n = states[0].n
    if any(s.n != n for s in states) or n != params.n:
        raise ConfigurationError("all coupled copies need the same n as params")
    copies = [s.copy() for s in states]
    tape = RandomTape(seed, params)
    pairs = [(a, b) for a in range(len(copies)) for b in range(a + 1, len(copies))]
    l1 = np.zeros((len(pairs), horizon + 1), dtype=np.int64)
    linf = np.zeros((len(pairs), horizon + 1), dtype=np.int64)
    w = np.zeros((len(pairs), horizon + 1), dtype=np.int64) if record_w else None

    def dist(i, t):
        a, b = pairs[i]
        diff = copies[a].lengths - copies[b].lengths
        l1[i, t] = np.abs(diff).sum()
        linf[i, t] = np.abs(diff).max(initial=0)
        if w is not None:
            sup = np.nonzero(diff)[0]
            w[i, t] = (
                max(copies[a].lengths[sup].max(initial=0), copies[b].lengths[sup].max(initial=0))
                if len(sup)
                else 0
            )

    for i in range(len(pairs)):
        dist(i, 0)
    for t in range(horizon):
        ev = tape.event(t)
        if ev.arrival:
            # one pass over the streamed candidates serves every copy
            best_q = [-1] * len(copies)
            best_len = [None] * len(copies)
            for q in ev.choices():
                for c, cp in enumerate(copies):
                    lq = cp.lengths[q]
                    if best_len[c] is None or lq < best_len[c]:
                        best_len[c] = lq
                        best_q[c] = q
            for c, cp in enumerate(copies):
                cp.lengths[best_q[c]] += 1
        else:
            q = ev.dtilde
            for cp in copies:
                if cp.lengths[q] > 0:
                    cp.lengths[q] -= 1
        for i in range(len(pairs)):
            dist(i, t + 1)

    coal = np.full(len(pairs), -1, dtype=np.int64)
    for i in range(len(pairs)):
        hit = np.nonzero(l1[i] == 0)[0]
        if len(hit):
            coal[i] = hit[0]
    return CoupledRun(
        params=params,
        seed=seed,
        horizon=horizon,
        states=copies,
        l1=l1,
        linf=linf,
        coalesce_t=coal,
        w_series=w,
        pair_index=pairs,
    )


@dataclass
class PairSweepResult:
    replicas: int
    steps: int
    coalesce_t: np.ndarray
    violations: dict[str, int]

    def coalesced_fraction(self) -> float:
        return float(np.mean(self.coalesce_t >= 0))

    def median_coalescence(self) -> float:
        t = self.coalesce_t
        return float(np.median(np.where(t < 0, np.inf, t)))


def coupled_pairs_batch(
    pairs: list[tuple[QueueVector, QueueVector]],
    params: Params,
    seed: int,
    horizon: int,
    check_order: np.ndarray | bool = False,
    check_adjacent: np.ndarray | bool = False,
    stop_on_coalesce: bool = True,
) -> PairSweepResult:
    """Kernel-backed sweep over independent coupled pairs (one tape each)."""
    R = len(pairs)
    n = params.n
    la = np.zeros((R, n), dtype=np.int64)
    lb = np.zeros((R, n), dtype=np.int64)
    for r, (xa, xb) in enumerate(pairs):
        if xa.n != n or xb.n != n:
            raise ConfigurationError("pair size mismatch")
        la[r] = xa.lengths
        lb[r] = xb.lengths
    co = np.broadcast_to(np.uint8(check_order), (R,)).astype(np.uint8) \
        if isinstance(check_order, (bool, int)) else np.asarray(check_order, dtype=np.uint8)
    ca = np.broadcast_to(np.uint8(check_adjacent), (R,)).astype(np.uint8) \
        if isinstance(check_adjacent, (bool, int)) else np.asarray(check_adjacent, dtype=np.uint8)
    coal = np.zeros(R, dtype=np.int64)
    viol = np.zeros(kernels.N_VIOL, dtype=np.int64)
    hist_cap = int(max(np.abs(la - lb).max(initial=0) + 64, 128))
    status = kernels.coupled_pairs(
        la, lb, params.d, params.lam, horizon, np.uint64(seed), 0,
        co, ca, 1 if stop_on_coalesce else 0, coal, viol, hist_cap,
    )
    if status != kernels.OK:
        raise RuntimeError("coupled kernel overflow: distance bookkeeping blew past cap")
    return PairSweepResult(
        replicas=R,
        steps=horizon,
        coalesce_t=coal,
        violations={
            "l1_increase": int(viol[kernels.V_L1]),
            "linf_increase": int(viol[kernels.V_LINF]),
            "order": int(viol[kernels.V_ORDER]),
            "adjacency": int(viol[kernels.V_ADJ]),
        },
    )


def coalescence_stats(
    params: Params,
    pair_generator,
    replicas: int,
    horizon: int,
    seed: int,
) -> PairSweepResult:
    """Empirical coalescence times over replicas of coupled pairs.

    ``pair_generator(replica_index, rng)`` yields (x, y); each replica runs on
    its own derived tape.  Censored replicas report -1.
    """
    gen = np.random.default_rng(seed)
    pairs = [pair_generator(r, gen) for r in range(replicas)]
    return coupled_pairs_batch(
        pairs, params, seed, horizon, check_order=False, check_adjacent=False,
        stop_on_coalesce=True,
    )


# ---------------------------------------------------------------------------
# slow-relaxation experiment


@dataclass
class RelaxationResult:
    params: Params
    eps: float
    skipped: bool
    reason: str
    start_qk: float = 0.0
    horizon: int = 0
    replicas: int = 0
    snapshot_step: np.ndarray | None = None
    qk_mean: np.ndarray | None = None
    mean_step_change: float = 0.0     # empirical mean per-step change while in H^{3 eps}
    stderr: float = 0.0
    exact_drift_mean: float = 0.0     # exact drift averaged over visited snapshot states
    exact_drift_max: float = 0.0
    in_set_fraction: float = 1.0
    ceiling: float = 0.0              # 2 eps (1-lam)

    def within_ceiling(self, sigmas: float = 4.0) -> bool:
        return self.mean_step_change <= self.ceiling + sigmas * self.stderr


def relaxation_start(params: Params, eps: float) -> Profile:
    """A profile with every level deficit scaled down so Q_k <= (1-9 eps) scale_k.

    The deficits are c (1-lam)(lam d)^(j-1) with c chosen so the weighted sum
    lands exactly at the target (then floored), i.e. the good-set center pushed
    down uniformly.
    """
    from .coefficients import coefficients

    table = coefficients(params)
    n, k = params.n, params.k
    base = [(1 - params.lam) * params.lambda_d ** (i - 1) for i in range(1, k + 1)]
    denom = sum(table.beta[i] * base[i - 1] for i in range(1, k + 1))
    c = (1 - 9 * eps) * (1 - params.lam) * params.lambda_d ** (k - 1) / denom
    if c <= 0:
        raise ConfigurationError(f"9 eps >= 1 at eps = {eps}: no deficit scale exists")
    deficits = [int(np.floor(c * n * b)) for b in base]
    if any(deficits[i] > deficits[i + 1] for i in range(k - 1)):
        raise ConfigurationError("scaled deficits are not monotone")
    tails = [n - dv for dv in deficits]
    return Profile.from_tail_counts(n, tails)


def relaxation_experiment(
    params: Params,
    eps: float,
    replicas: int,
    seed: int,
    horizon: int | None = None,
    snapshot_every: int = 64,
    threads: int = 1,
) -> RelaxationResult:
    """Track Q_k from a deep-deficit start over ~n (lam d)^(k-1) steps.

    Runs on the profile chain (the exact lumped image of the vector chain, so
    the law of Q_k(X_t) is identical) for throughput.  The per-step change is
    measured per replica as (Q_k at exit-or-horizon - Q_k(0)) / steps, where
    exit is the first snapshot outside H^{3 eps}.
    """
    from .coefficients import coefficients
    from .drift import exact_drift_q
    from .engine import simulate
    from .functionals import q_functional
    from .sets import set_membership

    table = coefficients(params)
    k, n = params.k, params.n
    try:
        z = relaxation_start(params, eps)
    except ConfigurationError as exc:
        return RelaxationResult(params, eps, skipped=True, reason=str(exc))
    qk0 = q_functional(z, k, table)
    target = (1 - 9 * eps) * params.level_scale(k)
    if qk0 > target:
        return RelaxationResult(
            params, eps, skipped=True,
            reason=f"start has Q_k = {qk0} > (1-9eps) scale = {target}",
        )
    if not set_membership(z, "Hred", params, eps=3 * eps):
        return RelaxationResult(
            params, eps, skipped=True, reason="start not inside H^{3 eps}",
        )

    if horizon is None:
        horizon = int(round(n * params.lambda_d ** (k - 1)))
    horizon = (horizon // snapshot_every) * snapshot_every
    per_replica = np.zeros(replicas)
    qk_sum = None
    drift_vals = []
    in_set_steps = 0
    total_steps = 0

    def _run(r):
        return simulate(
            params, z, steps=horizon, seed=rng.replica_seed(seed, r),
            obs_every=snapshot_every, obs_levels=k + 1,
        )

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            logs = list(ex.map(_run, range(replicas)))
    else:
        logs = None
    for r in range(replicas):
        log = logs[r] if logs is not None else _run(r)
        qk = log.q[:, k - 1]
        member = np.array(
            [
                set_membership(
                    Profile.from_tail_counts(n, row[1:]), "Hred", params, eps=3 * eps
                )
                for row in log.tails
            ]
        )
        exits = np.nonzero(~member)[0]
        last = (exits[0] - 1) if len(exits) else (len(qk) - 1)
        if last < 1:
            last = 1  # degenerate: fell out immediately; measure the first block
        steps_used = int(log.obs_step[last])
        per_replica[r] = (qk[last] - qk[0]) / steps_used
        in_set_steps += steps_used
        total_steps += horizon
        if qk_sum is None:
            qk_sum = qk.copy()
        else:
            qk_sum += qk
        sel = np.linspace(0, last, min(last + 1, 16), dtype=int)
        for idx in sel:
            drift_vals.append(
                exact_drift_q(Profile.from_tail_counts(n, log.tails[idx][1:]), k, params, table)
            )
    mean = float(per_replica.mean())
    se = float(per_replica.std(ddof=1) / np.sqrt(replicas)) if replicas > 1 else float("inf")
    return RelaxationResult(
        params=params,
        eps=eps,
        skipped=False,
        reason="",
        start_qk=qk0,
        horizon=horizon,
        replicas=replicas,
        snapshot_step=np.concatenate([[0], snapshot_every * np.arange(1, horizon // snapshot_every + 1)]),
        qk_mean=qk_sum / replicas,
        mean_step_change=mean,
        stderr=se,
        exact_drift_mean=float(np.mean(drift_vals)),
        exact_drift_max=float(np.max(drift_vals)),
        in_set_fraction=in_set_steps / max(total_steps, 1),
        ceiling=2 * eps * (1 - params.lam),
    )


def adjacent_pair_in_N(params: Params, eps: float, gen: np.random.Generator):
    """An adjacent pair x <= y with both endpoints in N^eps."""
    from .sets import sample_profile_in_N, set_membership

    for _ in range(256):
        prof = sample_profile_in_N(params, eps, gen)
        y = QueueVector.from_profile(prof)
        # remove one customer from a queue whose level change keeps N^eps
        order = gen.permutation(params.n)
        for q in order:
            L = y.lengths[q]
            if L == 0:
                continue
            x = y.copy()
            x.lengths[q] -= 1
            if set_membership(x.profile(), "N", params, eps=eps):
                return x, y
    raise ConfigurationError("could not build an adjacent pair inside N^eps")
