"""Mean-field fixed point pi(j) = lam^(1 + d + ... + d^(j-1)) and its linearization."""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .errors import ConfigurationError
from .params import Params

_DPS = 50


@dataclass(frozen=True)
class FixedPoint:
    """Log-space fixed point values and linearized deficits.

    ``log_pi[j-1]`` is log pi(j) as an mpmath float (pi itself can underflow
    any machine format: the geometric exponent is kept as an exact integer).
    ``tilde_u_deficit[j-1]`` is 1 - tilde_u_j = (1-lam)(1 + lam d + ... + (lam d)^(j-1)).
    hat_u aliases pi.
    """

    lam: float
    d: int
    log_pi: tuple[mp.mpf, ...]
    tilde_u_deficit: tuple[mp.mpf, ...]

    def log_pi_float(self, j: int) -> float:
        """log pi(j) as a double, saturating to -inf when out of range."""
        v = self.log_pi[j - 1]
        f = float(v)
        return f

    def pi(self, j: int) -> tuple[float, bool]:
        """(pi(j) as a double, underflowed-to-zero flag).  Never silent, never NaN."""
        with mp.workdps(_DPS):
            v = mp.e ** self.log_pi[j - 1]
            f = float(v)
        return f, (f == 0.0 and v != 0)

    def hat_u(self, j: int) -> tuple[float, bool]:
        return self.pi(j)


def fixed_point(params: Params, j_max: int) -> FixedPoint:
    """Evaluate log pi(j) and the linearized deficits for j = 1..j_max.

    The exponent 1 + d + ... + d^(j-1) is summed exactly over the integers, so
    the only rounding is the final multiply by log lam at 50 significant digits
    (relative error far below 1e-12).
    """
    if j_max < 1:
        raise ConfigurationError(f"j_max must be >= 1, got {j_max}")
    if params.lam <= 0.0:
        raise ConfigurationError("fixed point needs lam > 0")
    lam, d = params.lam, params.d
    with mp.workdps(_DPS):
        log_lam = mp.log(mp.mpf(repr(lam)))
        ld = mp.mpf(repr(lam)) * d
        logs = []
        deficits = []
        expo = 0          # exact integer 1 + d + ... + d^(j-1)
        geo = mp.mpf(0)   # 1 + (lam d) + ... + (lam d)^(j-1)
        power = mp.mpf(1)
        for _ in range(j_max):
            expo = expo * d + 1
            geo += power
            power *= ld
            logs.append(expo * log_lam)
            deficits.append((1 - mp.mpf(repr(lam))) * geo)
    return FixedPoint(lam=lam, d=d, log_pi=tuple(logs), tilde_u_deficit=tuple(deficits))
