"""Counter-based deterministic random streams.

Every random draw in the simulator is a pure function of (seed, stream, keys...)
built on the splitmix64 finalizer. There is no shared sequential state, so one
subsystem consuming extra draws (e.g. the warning-compliance path) cannot shift
the values seen by any other subsystem. That property is what makes paired
assisted/control runs comparable tick for tick.

Not cryptographic. Stable across platforms and numpy versions: only 64-bit
integer arithmetic is used.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Stream ids: keep these unique and frozen, they are part of run reproducibility.
STREAM_SPAWN = 1
STREAM_BEHAVIOR = 2
STREAM_DRIVER = 3
STREAM_BOOTSTRAP = 4
STREAM_TREE = 5
STREAM_COMPLIANCE = 6
STREAM_TEST = 99


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def u64(*keys: int) -> int:
    """Fold integer keys into one deterministic 64-bit value."""
    h = 0
    for k in keys:
        h = mix64((h + (int(k) & _MASK) * _GOLDEN) & _MASK)
    return h


def uniform(*keys: int) -> float:
    """Deterministic float in [0, 1) keyed by the arguments."""
    return (u64(*keys) >> 11) * 2.0**-53


def randint(n: int, *keys: int) -> int:
    """Deterministic integer in [0, n) keyed by the arguments.

    Uses a plain modulo; the bias is O(n / 2**64) and irrelevant here.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    return u64(*keys) % n


def uniform_range(lo: float, hi: float, *keys: int) -> float:
    return lo + (hi - lo) * uniform(*keys)


def u64_array(counters: np.ndarray, *keys: int) -> np.ndarray:
    """Vectorized u64: one value per counter, equal to u64(*keys, c)."""
    h0 = np.uint64(u64(*keys))
    with np.errstate(over="ignore"):
        z = h0 + counters.astype(np.uint64) * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
    return z


def uniform_array(counters: np.ndarray, *keys: int) -> np.ndarray:
    return (u64_array(counters, *keys) >> np.uint64(11)) * 2.0**-53


def randint_array(n: int, counters: np.ndarray, *keys: int) -> np.ndarray:
    if n <= 0:
        raise ValueError("n must be positive")
    return (u64_array(counters, *keys) % np.uint64(n)).astype(np.int64)


def shuffled(items: list, *keys: int) -> list:
    """Deterministic Fisher-Yates shuffle keyed by the arguments."""
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = randint(i + 1, *keys, i)
        out[i], out[j] = out[j], out[i]
    return out
