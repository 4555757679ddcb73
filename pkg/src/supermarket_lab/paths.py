"""Adjacent-state paths inside the good set N^eps.

Two phases, mirroring the connectivity argument for the good set:
 (i) normalize each endpoint to the center P (u_j = u*_j for all j), adjusting
     one level at a time from j = k down to 1 by removing customers from
     length-j queues or adding to length-(j-1) queues;
(ii) connect the two centered vectors by fixing the set of queues of each
     length 0..k-1 in turn, alternating "add one customer to a queue that is
     too short" with "drain a queue that is too long down to the level".

Free choices of concrete queues are resolved lowest-index-first (membership is
index-blind).  Total length is bounded by 4 n (1-lam)(lam d)^(k-1).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .params import Params
from .sets import center_tail_counts, n_deficit_bounds, set_membership
from .vector import QueueVector


@dataclass
class Path:
    start: QueueVector
    queue_idx: np.ndarray  # int64[m]
    delta: np.ndarray      # int8[m], +1 or -1

    def __len__(self) -> int:
        return len(self.queue_idx)

    def end(self) -> QueueVector:
        out = self.start.copy()
        np.add.at(out.lengths, self.queue_idx, self.delta.astype(np.int64))
        return out

    def states(self):
        """Yield every state along the path, start included (copies)."""
        cur = self.start.copy()
        yield cur.copy()
        for q, dv in zip(self.queue_idx, self.delta):
            cur.lengths[q] += dv
            yield cur.copy()

    def to_csv(self, path) -> None:
        """Dump one state-delta per line: step, queue, delta."""
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "queue", "delta"])
            for s, (q, dv) in enumerate(zip(self.queue_idx, self.delta), start=1):
                w.writerow([s, int(q), int(dv)])


@dataclass
class PathReport:
    valid: bool
    length: int
    length_cap: float
    endpoint_ok: bool
    membership_ok: bool
    first_violation: int  # step index of the first state outside N^eps, -1 if none


class _LevelIndex:
    """Lowest-index queue per level with lazy heap deletion."""

    def __init__(self, lengths: np.ndarray):
        self.lengths = lengths
        self.heaps: dict[int, list[int]] = {}
        for q, L in enumerate(lengths):
            self.heaps.setdefault(int(L), []).append(q)
        for h in self.heaps.values():
            heapq.heapify(h)

    def pop_lowest(self, level: int) -> int:
        h = self.heaps.get(level)
        while h:
            q = heapq.heappop(h)
            if self.lengths[q] == level:
                return q
        raise ConfigurationError(f"no queue of length exactly {level} available")

    def move(self, q: int, new_level: int) -> None:
        heapq.heappush(self.heaps.setdefault(new_level, []), q)


def _normalize_to_center(x: QueueVector, params: Params) -> tuple[list[tuple[int, int]], QueueVector]:
    """Phase (i): adjust levels k..1 to the center tail counts."""
    n, k = params.n, params.k
    stars = center_tail_counts(params)  # tail*_j for j = 1..k
    cur = x.copy()
    idx = _LevelIndex(cur.lengths)
    tails = [int(np.sum(cur.lengths >= j)) for j in range(k + 2)]
    tails[0] = n
    deltas: list[tuple[int, int]] = []
    for j in range(k, 0, -1):
        target = int(stars[j - 1])
        while tails[j] > target:
            q = idx.pop_lowest(j)
            cur.lengths[q] -= 1
            idx.move(q, j - 1)
            tails[j] -= 1
            deltas.append((q, -1))
        while tails[j] < target:
            q = idx.pop_lowest(j - 1)
            cur.lengths[q] += 1
            idx.move(q, j)
            tails[j] += 1
            deltas.append((q, +1))
    return deltas, cur


def _connect_in_center(xc: QueueVector, yc: QueueVector, params: Params) -> list[tuple[int, int]]:
    """Phase (ii): relabeling walk between two vectors with identical profiles."""
    k = params.k
    cur = xc.copy()
    tgt = yc.lengths
    deltas: list[tuple[int, int]] = []
    for j in range(k):
        too_short = [q for q in range(params.n) if cur.lengths[q] == j and tgt[q] > j]
        too_long = [q for q in range(params.n) if tgt[q] == j and cur.lengths[q] > j]
        if len(too_long) > len(too_short):
            raise ConfigurationError("center walk invariant broken (r < s)")
        for m, ql in enumerate(too_long):
            qi = too_short[m]
            cur.lengths[qi] += 1
            deltas.append((qi, +1))
            while cur.lengths[ql] > j:
                cur.lengths[ql] -= 1
                deltas.append((ql, -1))
        for qi in too_short[len(too_long):]:
            cur.lengths[qi] += 1
            deltas.append((qi, +1))
    if not np.array_equal(cur.lengths, tgt):
        raise ConfigurationError("center walk failed to reach the target")
    return deltas


def length_cap(params: Params) -> float:
    return 4.0 * params.n * (1.0 - params.lam) * params.lambda_d ** (params.k - 1)


def path_in_N(x: QueueVector, y: QueueVector, params: Params, eps: float | None = None) -> Path:
    """Adjacent-state path x -> y through the center, staying inside N^eps."""
    eps = params.eps if eps is None else eps
    for name, v in (("x", x), ("y", y)):
        if not set_membership(v.profile(), "N", params, eps=eps):
            raise ConfigurationError(f"endpoint {name} is not in N^eps")
    if np.array_equal(x.lengths, y.lengths):
        return Path(
            start=x.copy(),
            queue_idx=np.zeros(0, dtype=np.int64),
            delta=np.zeros(0, dtype=np.int8),
        )
    d_x, xc = _normalize_to_center(x, params)
    d_y, yc = _normalize_to_center(y, params)
    d_mid = _connect_in_center(xc, yc, params)
    back = [(q, -dv) for (q, dv) in reversed(d_y)]
    all_d = d_x + d_mid + back
    if all_d:
        qs, ds = zip(*all_d)
    else:
        qs, ds = (), ()
    return Path(
        start=x.copy(),
        queue_idx=np.asarray(qs, dtype=np.int64),
        delta=np.asarray(ds, dtype=np.int8),
    )


def validate_path(path: Path, y: QueueVector, params: Params, eps: float | None = None) -> PathReport:
    """Walk the path once, checking adjacency, membership and the length cap.

    Membership is checked incrementally on the tail counts (levels 1..k+1), so
    validation is O(length * k).
    """
    eps = params.eps if eps is None else eps
    n, k = params.n, params.k
    lo_hi = [n_deficit_bounds(params, eps, j) for j in range(1, k + 1)]
    lengths = path.start.lengths.copy()
    tails = np.zeros(k + 3, dtype=np.int64)
    for j in range(1, k + 2):
        tails[j] = int(np.sum(lengths >= j))

    def in_set() -> bool:
        if tails[k + 1] != 0:
            return False
        for j in range(1, k + 1):
            lo, hi = lo_hi[j - 1]
            dj = n - tails[j]
            if dj < lo or dj > hi:
                return False
        return True

    first_violation = -1 if in_set() else 0
    for step_i, (q, dv) in enumerate(zip(path.queue_idx, path.delta), start=1):
        if dv == 1:
            lengths[q] += 1
            lv = lengths[q]
            if lv <= k + 2:
                tails[lv] += 1
        else:
            lv = lengths[q]
            if lv <= k + 2:
                tails[lv] -= 1
            lengths[q] -= 1
            if lengths[q] < 0:
                return PathReport(False, len(path), length_cap(params), False, False, step_i)
        if first_violation < 0 and not in_set():
            first_violation = step_i

    endpoint_ok = np.array_equal(lengths, y.lengths)
    membership_ok = first_violation < 0
    cap = length_cap(params)
    valid = endpoint_ok and membership_ok and len(path) <= cap
    return PathReport(
        valid=valid,
        length=len(path),
        length_cap=cap,
        endpoint_ok=endpoint_ok,
        membership_ok=membership_ok,
        first_violation=first_violation,
    )
