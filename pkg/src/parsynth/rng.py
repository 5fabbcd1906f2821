"""Portable deterministic randomness.

Every random draw in this package (wildcard sampling, noise synthesis) comes
from SplitMix64 rather than ``random`` or NumPy's generators, so that a seed
recorded in a ledger reproduces the same prompt or noise field on any
machine, in any language, forever.  The generator is pinned by the test
vectors in ``tests/test_rng.py``; do not change the mixing constants.

Derived draws are fixed as follows:

* ``next_double``: take the top 53 bits of the next output,
  ``(x >> 11) * 2**-53``, giving a uniform double in [0, 1).
* ``weighted_index``: multiply one double by the total weight and scan the
  cumulative sums; ties on the boundary go to the later entry.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_DOUBLE_SCALE = 2.0**-53


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Scalar SplitMix64 stream over a 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * _DOUBLE_SCALE

    def weighted_index(self, weights: list[float]) -> int:
        """Draw one index with probability proportional to ``weights``."""
        if not weights:
            raise ValueError("weighted_index needs at least one weight")
        total = float(sum(weights))
        if total <= 0 or not all(w >= 0 for w in weights):
            raise ValueError("weights must be non-negative with positive sum")
        u = self.next_double() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                return i
        return len(weights) - 1


def fill_u64(seed: int, count: int) -> np.ndarray:
    """Vectorized equivalent of ``count`` successive ``next_u64`` calls.

    Exploits that the SplitMix64 state after k steps is ``seed + k * gamma``
    (mod 2**64), so the whole stream mixes in parallel.  Bit-identical to
    the scalar class; a property test enforces this.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    steps = np.arange(1, count + 1, dtype=np.uint64)
    z = (np.uint64(seed & _MASK) + steps * np.uint64(_GAMMA))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def uniform_doubles(seed: int, count: int) -> np.ndarray:
    """Uniform [0, 1) doubles, matching repeated ``next_double`` calls."""
    return (fill_u64(seed, count) >> np.uint64(11)) * _DOUBLE_SCALE
