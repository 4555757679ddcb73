"""Counter-based random streams.

Every random quantity in the simulators is addressed as ``(seed, stream, t, i)``:
``t`` is the step counter, ``i`` the draw index within the step, ``stream``
separates independent purposes (arrival flag / level or departure index /
choice list).  Draws are produced by the splitmix64 finalizer, so any event can
be regenerated from its address alone without storing history.  The numba
kernels in :mod:`supermarket_lab.kernels` re-implement the identical function;
``tests/test_vector_engine.py`` pins the two implementations against each
other.
"""

from __future__ import annotations

MASK = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15
STREAM_SALT = 0xD6E8FEB86659FD93

# Stream ids used by the engines.
STREAM_EVENT = 0   # arrival-vs-departure uniform (V_t)
STREAM_TARGET = 1  # departure target / profile level uniform
STREAM_CHOICE = 2  # the d-tuple of candidate queues (draws i = 0..d-1)
STREAM_REPLICA = 7 # per-replica seed derivation

_INV_2_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """splitmix64 finalizer on 64-bit ints."""
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int) -> int:
    return mix64((seed + stream * STREAM_SALT) & MASK)


def raw_draw(key: int, t: int, i: int) -> int:
    return mix64((key + t * GAMMA + i * STREAM_SALT) & MASK)


def uniform(seed: int, stream: int, t: int, i: int = 0) -> float:
    """Uniform in [0, 1) with 53 random bits, addressable by (seed, stream, t, i)."""
    return (raw_draw(stream_key(seed, stream), t, i) >> 11) * _INV_2_53


def index(seed: int, stream: int, t: int, n: int, i: int = 0) -> int:
    """Uniform index in [0, n).  Bias is O(n / 2^53), negligible for n <= 1e7."""
    j = int(uniform(seed, stream, t, i) * n)
    return n - 1 if j >= n else j


def replica_seed(seed: int, replica: int) -> int:
    """Derive an independent tape seed for a replica."""
    return mix64((seed + (replica + 1) * GAMMA) & MASK) ^ STREAM_SALT
