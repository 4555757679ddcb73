"""Queue-length profile (histogram) state and its exact one-step transition.

A profile stores integer counts per length.  The induced chain is the exact
exchangeability-lumped image of the full vector chain: an arrival lands at
level J with P(J >= j) = u_j^d (single threshold uniform), a potential
departure picks level I with P(I = i) = u_i - u_{i+1} and is idle at I = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ConfigurationError
from .params import Params


class Profile:
    """Histogram state: counts[i] = number of queues of length exactly i."""

    __slots__ = ("n", "counts")

    def __init__(self, counts, n: int | None = None):
        c = np.asarray(counts, dtype=np.int64)
        if c.ndim != 1 or len(c) == 0:
            raise ConfigurationError("counts must be a 1-d non-empty array")
        if np.any(c < 0):
            raise ConfigurationError("counts must be non-negative")
        total = int(c.sum())
        if n is not None and total != n:
            raise ConfigurationError(f"counts sum {total} != n {n}")
        self.n = total
        self.counts = c.copy()

    # -- constructors ------------------------------------------------------
    @classmethod
    def empty(cls, n: int) -> "Profile":
        return cls([n])

    @classmethod
    def all_at(cls, n: int, L: int) -> "Profile":
        c = np.zeros(L + 1, dtype=np.int64)
        c[L] = n
        return cls(c)

    @classmethod
    def from_lengths(cls, lengths) -> "Profile":
        lengths = np.asarray(lengths, dtype=np.int64)
        if np.any(lengths < 0):
            raise ConfigurationError("lengths must be non-negative")
        top = int(lengths.max(initial=0))
        return cls(np.bincount(lengths, minlength=top + 1))

    @classmethod
    def from_tail_counts(cls, n: int, tails) -> "Profile":
        """tails[j-1] = number of queues of length >= j, j = 1..J."""
        t = [n] + [int(v) for v in tails]
        if any(t[i] < t[i + 1] for i in range(len(t) - 1)) or t[-1] < 0:
            raise ConfigurationError("tail counts must be non-increasing and >= 0")
        counts = [t[i] - t[i + 1] for i in range(len(t) - 1)] + [t[-1]]
        return cls(counts, n=n)

    # -- views -------------------------------------------------------------
    def copy(self) -> "Profile":
        return Profile(self.counts, n=self.n)

    def max_length(self) -> int:
        nz = np.nonzero(self.counts)[0]
        return int(nz[-1]) if len(nz) else 0

    def tail_count(self, j: int) -> int:
        """Number of queues of length >= j (exact integer)."""
        if j <= 0:
            return self.n
        if j >= len(self.counts):
            return 0
        return int(self.counts[j:].sum())

    def tail_counts(self, j_max: int) -> np.ndarray:
        """Array [tail(0), ..., tail(j_max)]."""
        ext = np.zeros(j_max + 1, dtype=np.int64)
        upto = min(j_max + 1, len(self.counts))
        rev = np.cumsum(self.counts[::-1])[::-1]  # rev[i] = #queues length >= i
        ext[:upto] = rev[:upto]
        ext[0] = self.n
        return ext

    def u(self, j: int) -> float:
        return self.tail_count(j) / self.n

    def deficit_count(self, j: int) -> int:
        """n (1 - u_j) as an exact integer."""
        return self.n - self.tail_count(j)

    def norm1(self) -> int:
        """Total number of customers."""
        return int(np.dot(self.counts, np.arange(len(self.counts), dtype=np.int64)))

    def norminf(self) -> int:
        return self.max_length()

    def validate(self) -> None:
        if int(self.counts.sum()) != self.n or np.any(self.counts < 0):
            raise ConfigurationError("invalid profile")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Profile):
            return NotImplemented
        a, b = self.counts, other.counts
        m = max(len(a), len(b))
        return self.n == other.n and np.array_equal(
            np.pad(a, (0, m - len(a))), np.pad(b, (0, m - len(b)))
        )

    def __repr__(self) -> str:
        return f"Profile(n={self.n}, counts={self.counts.tolist()})"


@dataclass(frozen=True)
class StepOutcome:
    kind: str  # 'arrival' | 'departure' | 'idle' | 'rejected-arrival'
    level: int  # arrival: length J of the joined queue; departure: length I before service

    ARRIVAL = "arrival"
    DEPARTURE = "departure"
    IDLE = "idle"
    REJECTED = "rejected-arrival"  # only with a cap (oracle cross-validation)


class ProfileEventSource:
    """Sequential view of the counter-based uniforms the profile chain consumes.

    Step t uses uniform (seed, STREAM_EVENT, t) to decide arrival vs potential
    departure and (seed, STREAM_TARGET, t) for the level threshold scan.
    """

    def __init__(self, seed: int, t0: int = 0):
        self.seed = seed
        self.t = t0

    def pair(self) -> tuple[float, float]:
        u1 = rng.uniform(self.seed, rng.STREAM_EVENT, self.t)
        u2 = rng.uniform(self.seed, rng.STREAM_TARGET, self.t)
        self.t += 1
        return u1, u2


def _u_pow_d(tail: int, n: int, d: int) -> float:
    if tail == n:
        return 1.0
    if tail == 0:
        return 0.0
    return math.pow(tail / n, d)


def step(
    profile: Profile,
    params: Params,
    source: ProfileEventSource,
    cap: int | None = None,
) -> StepOutcome:
    """Advance the profile by one transition in place.

    ``cap`` (oracle cross-validation only) rejects arrivals that would create
    a queue longer than ``cap``; the event probabilities are unchanged, only
    that one destination becomes a no-op.
    """
    u1, u2 = source.pair()
    n, d, lam = profile.n, params.d, params.lam
    if u1 < lam / (1.0 + lam):
        # arrival: J = max{j >= 0 : u2 <= u_j^d}; scan stops at the first level
        # whose tail power drops below u2 (tails are non-increasing in j).
        j = 0
        while True:
            t_next = profile.tail_count(j + 1)
            if t_next == 0 or u2 > _u_pow_d(t_next, n, d):
                break
            j += 1
        if cap is not None and j >= cap:
            return StepOutcome(StepOutcome.REJECTED, j)
        if len(profile.counts) < j + 2:
            profile.counts = np.append(profile.counts, 0)
        profile.counts[j] -= 1
        profile.counts[j + 1] += 1
        return StepOutcome(StepOutcome.ARRIVAL, j)
    # potential departure: I = max{i >= 0 : u2 * n < tail(i)}
    i = 0
    scaled = u2 * n
    while scaled < profile.tail_count(i + 1):
        i += 1
    if i == 0:
        return StepOutcome(StepOutcome.IDLE, 0)
    profile.counts[i] -= 1
    profile.counts[i - 1] += 1
    return StepOutcome(StepOutcome.DEPARTURE, i)
