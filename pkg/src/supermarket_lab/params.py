"""Model parameters and the equilibrium max-queue-length index."""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath as mp

from .errors import ConfigurationError


def k_of(lam: float, d: int) -> int:
    """ceil(log(1/(1-lam)) / log d), floored at 1.

    At an exact integer boundary of the log ratio the ceiling of the ratio
    itself is returned; callers that care can detect the transitional range
    with :func:`is_transitional`.
    """
    if not (0.0 < lam < 1.0):
        raise ConfigurationError(f"lam must be in (0,1), got {lam}")
    if d < 2:
        raise ConfigurationError(f"d must be >= 2, got {d}")
    # mpmath sidesteps double rounding right at integer boundaries such as
    # (1-lam)^-1 = d^m.
    with mp.workdps(50):
        ratio = mp.log(1 / (mp.mpf(1) - mp.mpf(repr(lam)))) / mp.log(d)
        k = int(mp.ceil(ratio))
    return max(k, 1)


def is_transitional(lam: float, d: int, margin: float = 0.05) -> bool:
    """True when log(1/(1-lam))/log d is within ``margin`` of an integer."""
    with mp.workdps(50):
        ratio = mp.log(1 / (mp.mpf(1) - mp.mpf(repr(lam)))) / mp.log(d)
        frac = ratio - mp.floor(ratio)
    return bool(min(frac, 1 - frac) < margin)


def predicted_max_length(n: int, lam: float, d: int, j_cap: int = 200) -> int:
    """Largest k with lam^(1 + d + ... + d^(k-1)) > 1/n.

    Heuristic prediction of the equilibrium maximum queue length; exposed for
    exploration, never asserted as an invariant.
    """
    with mp.workdps(60):
        log_lam = mp.log(mp.mpf(repr(lam)))
        threshold = -mp.log(n)
        best = 0
        expo = 0
        for j in range(1, j_cap + 1):
            expo = expo * d + 1  # 1 + d + ... + d^(j-1), exact integer
            if expo * log_lam > threshold:
                best = j
            else:
                break
    return best


@dataclass(frozen=True)
class Params:
    """The tuple (n, d, lambda, epsilon, k) plus derived quantities.

    ``k`` defaults to the ceiling index k_of(lam, d).  ``lam = 0`` is accepted
    (pure-death dynamics used by coupling oracles) but then ``k`` must be given
    explicitly.
    """

    n: int
    d: int
    lam: float
    eps: float = 0.1
    k: int = field(default=-1)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if self.d < 1:
            raise ConfigurationError(f"d must be >= 1, got {self.d}")
        if not (0.0 <= self.lam < 1.0):
            raise ConfigurationError(f"lam must be in [0,1), got {self.lam}")
        if not (0.0 < self.eps < 1.0):
            raise ConfigurationError(f"eps must be in (0,1), got {self.eps}")
        if self.k == -1:
            if self.lam == 0.0 or self.d < 2:
                raise ConfigurationError("k must be given explicitly when lam = 0 or d = 1")
            object.__setattr__(self, "k", k_of(self.lam, self.d))
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")

    @property
    def lambda_d(self) -> float:
        return self.lam * self.d

    @property
    def arrival_prob(self) -> float:
        return self.lam / (1.0 + self.lam)

    def level_scale(self, j: int) -> float:
        """n (1-lam) (lam d)^(j-1), the equilibrium scale of the level-j deficit."""
        return self.n * (1.0 - self.lam) * self.lambda_d ** (j - 1)

    def replace(self, **kw) -> "Params":
        base = dict(n=self.n, d=self.d, lam=self.lam, eps=self.eps, k=self.k)
        base.update(kw)
        return Params(**base)
