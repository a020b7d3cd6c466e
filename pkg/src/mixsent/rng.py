"""Portable deterministic shuffling.

All data-order randomness (corpus splits, per-epoch training shuffles) goes
through splitmix64 + Fisher-Yates so that a given seed produces the same
order on any platform or implementation, independent of numpy's generators.

splitmix64 reference: Steele, Lea & Flood, "Fast splittable pseudorandom
number generators" (the JDK SplittableRandom mixer).
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """64-bit splitmix generator with a plain integer seed."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow requires n > 0")
        limit = _MASK64 - (_MASK64 + 1) % n
        while True:
            r = self.next_u64()
            if r <= limit:
                return r % n


def derive_seed(seed: int, *salts: int) -> int:
    """Fold integer salts into a seed; used to give independent streams
    (e.g. one per class label) a documented derivation from the run seed."""
    state = seed & _MASK64
    for salt in salts:
        state = _mix((state + _GAMMA * ((salt & _MASK64) + 1)) & _MASK64)
    return state


def shuffled(items: list, rng: SplitMix64) -> list:
    """Fisher-Yates shuffle (copy); consumes one bounded draw per swap."""
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.randbelow(i + 1)
        out[i], out[j] = out[j], out[i]
    return out
