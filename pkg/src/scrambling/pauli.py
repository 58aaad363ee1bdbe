"""Pauli strings, weights, and the single-gate transition rule.

Letters use the numbering I=0, X=1, Y=2, Z=3. A string is stored as two
bit masks ``x`` and ``z`` with I=(0,0), X=(1,0), Z=(0,1), Y=(1,1), so the
weight is ``popcount(x | z)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, NamedTuple

import numpy as np

from .rng import as_random_source

LETTERS = "IXYZ"
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_BITS = {v: k for k, v in _BITS.items()}


@dataclass(frozen=True)
class PauliString:
    """An ``n``-qubit Pauli operator without phase."""

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qubit count must be positive, got {self.n}")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("bit masks exceed the qubit count")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        x = z = 0
        for i, ch in enumerate(label.upper()):
            try:
                bx, bz = _BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r}") from None
            x |= bx << i
            z |= bz << i
        return cls(len(label), x, z)

    @classmethod
    def from_digits(cls, digits: Iterable[int]) -> "PauliString":
        return cls.from_label("".join(LETTERS[d] for d in digits))

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    def letter(self, i: int) -> str:
        return _FROM_BITS[((self.x >> i) & 1, (self.z >> i) & 1)]

    @property
    def label(self) -> str:
        return "".join(self.letter(i) for i in range(self.n))

    @property
    def digits(self) -> tuple[int, ...]:
        return tuple(LETTERS.index(self.letter(i)) for i in range(self.n))

    @property
    def support_mask(self) -> int:
        return self.x | self.z

    def support(self) -> frozenset[int]:
        m = self.support_mask
        return frozenset(i for i in range(self.n) if (m >> i) & 1)

    def __str__(self) -> str:
        return self.label


def weight(p: PauliString) -> int:
    return p.support_mask.bit_count()


class PauliPair(NamedTuple):
    """Letters of a Pauli string restricted to the two qubits of a gate."""

    a: str
    b: str

    @property
    def index(self) -> int:
        """Position in 0..15 with I=0, X=1, Y=2, Z=3 as base-4 digits."""
        return 4 * LETTERS.index(self.a) + LETTERS.index(self.b)

    @classmethod
    def from_index(cls, index: int) -> "PauliPair":
        return cls(LETTERS[index // 4], LETTERS[index % 4])

    def is_identity(self) -> bool:
        return self.a == "I" and self.b == "I"


IDENTITY_PAIR = PauliPair("I", "I")
# Outcome o in 0..14 is the pair with base-4 index o + 1.
NONIDENTITY_PAIRS = tuple(PauliPair.from_index(o + 1) for o in range(15))
# Which side of the pair carries a non-identity letter, per outcome.
OUTCOME_KEEPS_A = np.array([(o + 1) // 4 != 0 for o in range(15)], dtype=np.uint8)
OUTCOME_KEEPS_B = np.array([(o + 1) % 4 != 0 for o in range(15)], dtype=np.uint8)


def sample_outcomes(randomness, size) -> np.ndarray:
    """Uniform draws over the 15 non-identity pairs, as outcome indices 0..14."""
    rs = as_random_source(randomness)
    return rs.gen.integers(0, 15, size=size, dtype=np.uint8)


def gate_transition(pair: PauliPair, randomness) -> PauliPair:
    """Image of ``pair`` under a uniformly random two-qubit Clifford.

    The identity pair is fixed; every other pair goes to one of the 15
    non-identity pairs uniformly.
    """
    pair = PauliPair(*pair)
    if pair.is_identity():
        return IDENTITY_PAIR
    return NONIDENTITY_PAIRS[int(sample_outcomes(randomness, None))]


def weight_class_count(n: int, ell: int) -> int:
    """Number of ``n``-qubit Pauli strings of weight ``ell``: ``3**ell * C(n, ell)``."""
    if n < 0 or not 0 <= ell <= n:
        raise ValueError(f"weight {ell} out of range for n={n}")
    return 3**ell * comb(n, ell)
