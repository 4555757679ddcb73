"""Exact finite-chain computations on tiny capped instances.

The capped chain keeps the arrival/departure event probabilities of the real
process and turns arrivals that would exceed the cap L into no-ops.  Kernels
are assembled in exact rational arithmetic and exposed as float matrices;
profile and vector representations are related by the exchangeability lumping
map, which is verified numerically by the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import ConfigurationError, StateSpaceError

MAX_STATES = 1_000_000


def profile_states(n: int, L: int) -> list[tuple[int, ...]]:
    """All count vectors (c_0..c_L) with sum n, lexicographic order."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(tuple(prefix + [remaining]))
            return
        for c in range(remaining + 1):
            rec(prefix + [c], remaining - c, slots - 1)

    rec([], n, L + 1)
    return out


def state_index_radix(counts: tuple[int, ...], radix: int) -> int:
    """Mixed-radix encoding matching the kernels' on-the-fly lumping."""
    idx = 0
    mult = 1
    for c in counts:
        idx += c * mult
        mult *= radix
    return idx


@dataclass
class CappedChain:
    n: int
    L: int
    d: int
    lam: float
    representation: str
    states: list[tuple[int, ...]]
    index: dict[tuple[int, ...], int]
    P: np.ndarray

    def state_count(self) -> int:
        return len(self.states)

    def hist_index(self) -> np.ndarray:
        """Radix index of each state for matching empirical kernel histograms."""
        if self.representation == "profile":
            return np.array(
                [state_index_radix(s, self.n + 1) for s in self.states], dtype=np.int64
            )
        raise ConfigurationError("hist_index is defined on the profile representation")


def _tails(counts: tuple[int, ...]) -> list[int]:
    L = len(counts) - 1
    t = [0] * (L + 2)
    acc = 0
    for j in range(L, -1, -1):
        acc += counts[j]
        t[j] = acc
    return t


def build_kernel(n: int, L: int, d: int, lam: float, representation: str = "profile") -> CappedChain:
    """Exact one-step kernel of the capped chain."""
    if representation == "profile":
        states = profile_states(n, L)
    elif representation == "vector":
        if (L + 1) ** n > MAX_STATES:
            raise StateSpaceError(f"vector space has {(L + 1) ** n} states")
        states = list(product(range(L + 1), repeat=n))
    else:
        raise ConfigurationError(f"unknown representation {representation!r}")
    if len(states) > MAX_STATES:
        raise StateSpaceError(f"state space has {len(states)} states")

    lam_f = Fraction(lam)
    pa = lam_f / (1 + lam_f)
    pd = 1 - pa
    index = {s: i for i, s in enumerate(states)}
    P = [[Fraction(0)] * len(states) for _ in range(len(states))]

    if representation == "profile":
        for si, counts in enumerate(states):
            t = _tails(counts)
            u = [Fraction(t[j], n) for j in range(L + 2)]
            row = P[si]
            # arrivals: P(J = j) = u_j^d - u_{j+1}^d
            for j in range(L + 1):
                pj = u[j] ** d - u[j + 1] ** d
                if pj == 0:
                    continue
                if j == L:
                    row[si] += pa * pj  # rejected: would exceed the cap
                else:
                    nc = list(counts)
                    nc[j] -= 1
                    nc[j + 1] += 1
                    row[index[tuple(nc)]] += pa * pj
            # departures: P(I = i) = (t_i - t_{i+1})/n, idle at i = 0
            row[si] += pd * Fraction(counts[0], n)
            for i in range(1, L + 1):
                pi_ = Fraction(counts[i], n)
                if pi_ == 0:
                    continue
                nc = list(counts)
                nc[i] -= 1
                nc[i - 1] += 1
                row[index[tuple(nc)]] += pd * pi_
    else:
        if n**d > 4_000_000:
            raise StateSpaceError(f"n^d = {n ** d} choice tuples")
        tuples = list(product(range(n), repeat=d))
        w_choice = Fraction(1, n**d)
        w_dep = Fraction(1, n)
        for si, lengths in enumerate(states):
            row = P[si]
            for tup in tuples:
                best_len = min(lengths[q] for q in tup)
                for q in tup:
                    if lengths[q] == best_len:
                        best = q
                        break
                if best_len >= L:
                    row[si] += pa * w_choice
                else:
                    nl = list(lengths)
                    nl[best] += 1
                    row[index[tuple(nl)]] += pa * w_choice
            for q in range(n):
                if lengths[q] == 0:
                    row[si] += pd * w_dep
                else:
                    nl = list(lengths)
                    nl[q] -= 1
                    row[index[tuple(nl)]] += pd * w_dep

    mat = np.array([[float(v) for v in row] for row in P])
    err = np.abs(mat.sum(axis=1) - 1.0).max()
    if err > 1e-12:
        raise RuntimeError(f"kernel rows deviate from stochastic by {err}")
    return CappedChain(
        n=n, L=L, d=d, lam=lam, representation=representation,
        states=states, index=index, P=mat,
    )


def lump_vector_kernel(vchain: CappedChain) -> tuple[CappedChain, np.ndarray]:
    """Push the vector kernel through the exchangeability map.

    Returns the lumped chain plus the class id of every vector state.  Raises
    if the pushforward rows of two states in one class disagree (they cannot,
    by symmetry; this is the lumpability certificate).
    """
    if vchain.representation != "vector":
        raise ConfigurationError("expected a vector chain")
    n, L = vchain.n, vchain.L
    pstates = profile_states(n, L)
    pindex = {s: i for i, s in enumerate(pstates)}
    cls = np.zeros(len(vchain.states), dtype=np.int64)
    for i, lengths in enumerate(vchain.states):
        counts = [0] * (L + 1)
        for v in lengths:
            counts[v] += 1
        cls[i] = pindex[tuple(counts)]

    m = len(pstates)
    lumped = np.full((m, m), np.nan)
    for i in range(len(vchain.states)):
        row = np.zeros(m)
        np.add.at(row, cls, vchain.P[i])
        ci = cls[i]
        if np.isnan(lumped[ci]).all():
            lumped[ci] = row
        elif not np.allclose(lumped[ci], row, atol=1e-12, rtol=0):
            raise RuntimeError("vector kernel is not lumpable: class rows disagree")
    chain = CappedChain(
        n=n, L=L, d=vchain.d, lam=vchain.lam, representation="profile",
        states=pstates, index=pindex, P=lumped,
    )
    return chain, cls


def stationary(chain: CappedChain) -> np.ndarray:
    """Solve pi P = pi, sum pi = 1 by a dense linear solve."""
    m = chain.state_count()
    A = chain.P.T - np.eye(m)
    A[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"stationary solve failed (reducible chain?): {exc}")
    residual = np.abs(pi @ chain.P - pi).max()
    if residual > 1e-12:
        raise RuntimeError(f"stationary residual {residual}")
    if pi.min() < -1e-13:
        raise RuntimeError("negative stationary mass: chain not irreducible?")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def tv_mixing(
    chain: CappedChain,
    start,
    tv_threshold: float,
    t_max: int = 1_000_000,
) -> tuple[int, list[float]]:
    """Smallest t with TV(law at t from start, stationary) <= threshold.

    Returns (t, the TV curve up to t).  ``start`` is a state tuple or index.
    """
    pi = stationary(chain)
    i0 = start if isinstance(start, (int, np.integer)) else chain.index[tuple(start)]
    dist = np.zeros(chain.state_count())
    dist[i0] = 1.0
    curve = [tv_distance(dist, pi)]
    t = 0
    while curve[-1] > tv_threshold:
        if t >= t_max:
            raise RuntimeError(f"no mixing below {tv_threshold} within {t_max} steps")
        dist = dist @ chain.P
        t += 1
        curve.append(tv_distance(dist, pi))
    return t, curve
