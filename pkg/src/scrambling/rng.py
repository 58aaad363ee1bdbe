"""Seedable, splittable randomness.

Every stochastic routine in the package takes a :class:`RandomSource`
(or an integer seed, converted with :func:`as_random_source`). Child
streams are derived with a splitmix64 mix of ``(seed, index)`` so that
trial ``i`` of an experiment sees the same stream no matter how trials
are scheduled.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, index: int) -> int:
    """Derive the seed of stream ``index`` from ``master_seed``.

    ``trial_seed = splitmix64(master_seed + (index + 1) * 0x9E3779B97F4A7C15 mod 2**64)``
    """
    return splitmix64((master_seed & MASK64) + (index + 1) * _GOLDEN)


class RandomSource:
    """A numpy ``Generator`` (PCG64) that remembers its seed.

    Parameters
    ----------
    seed : int
        64-bit seed. Negative or wider values are reduced mod 2**64.
    """

    __slots__ = ("seed", "gen")

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.gen = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, index: int) -> "RandomSource":
        return RandomSource(mix_seed(self.seed, index))

    def children(self, count: int) -> list["RandomSource"]:
        return [self.child(i) for i in range(count)]

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed})"


def as_random_source(randomness) -> RandomSource:
    if isinstance(randomness, RandomSource):
        return randomness
    if randomness is None:
        raise TypeError("an explicit seed or RandomSource is required")
    return RandomSource(int(randomness))
