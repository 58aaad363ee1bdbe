"""Lumped birth-death chain on Pauli weights for the sequential circuit.

States are weights 1..n. From weight ``x`` one random gate on a uniformly
chosen pair of qubits moves the weight to ``x - 1``, ``x`` or ``x + 1`` with

    back    = 2 x (x - 1) / (5 n (n - 1))
    forward = 6 x (n - x) / (5 n (n - 1))
    stay    = 1 - back - forward

Arrays indexed by state use position ``x - 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.special import gammaln

from . import kernels
from .rng import as_random_source

LOG2_3 = math.log2(3)


class EigensolverError(RuntimeError):
    pass


def transition_row(n: int, x: int) -> tuple[float, float, float]:
    """``(back, stay, forward)`` probabilities out of state ``x``."""
    back, stay, fwd = transition_row_exact(n, x)
    return float(back), float(stay), float(fwd)


def transition_row_exact(n: int, x: int) -> tuple[Fraction, Fraction, Fraction]:
    if n < 2:
        raise ValueError(f"chain needs n >= 2, got {n}")
    if not 1 <= x <= n:
        raise ValueError(f"state {x} outside 1..{n}")
    denom = 5 * n * (n - 1)
    back = Fraction(2 * x * (x - 1), denom)
    fwd = Fraction(6 * x * (n - x), denom)
    stay = 1 - Fraction(2 * x * (3 * n - 2 * x - 1), denom)
    return back, stay, fwd


@dataclass(frozen=True)
class BirthDeathChain:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"chain needs n >= 2, got {self.n}")

    def rows(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(back, stay, forward)`` as float arrays over states 1..n."""
        n = self.n
        x = np.arange(1, n + 1, dtype=np.float64)
        denom = 5.0 * n * (n - 1)
        back = 2.0 * x * (x - 1) / denom
        fwd = 6.0 * x * (n - x) / denom
        stay = 1.0 - 2.0 * x * (3 * n - 2 * x - 1) / denom
        return back, stay, fwd

    def dense(self) -> np.ndarray:
        back, stay, fwd = self.rows()
        return np.diag(stay) + np.diag(fwd[:-1], 1) + np.diag(back[1:], -1)


@dataclass(frozen=True)
class WeightDistribution:
    """Mass on weights 1..n (``mass[k - 1]`` is the mass at weight k)."""

    n: int
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.shape != (self.n,):
            raise ValueError(f"mass must have length n={self.n}")
        if np.any(mass < 0):
            raise ValueError("mass must be nonnegative")
        object.__setattr__(self, "mass", mass)

    @classmethod
    def point(cls, n: int, ell: int) -> "WeightDistribution":
        if not 1 <= ell <= n:
            raise ValueError(f"weight {ell} outside 1..{n}")
        m = np.zeros(n)
        m[ell - 1] = 1.0
        return cls(n, m)

    def at(self, weight: int) -> float:
        return float(self.mass[weight - 1])

    def total(self) -> float:
        return math.fsum(self.mass)

    def mass_at_most(self, k: int) -> float:
        k = max(0, min(k, self.n))
        return math.fsum(self.mass[:k])


def log_stationary(n: int) -> np.ndarray:
    """Natural log of ``pi(k) = 3^k C(n,k) / (4^n - 1)`` for k = 1..n."""
    k = np.arange(1, n + 1, dtype=np.float64)
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    log_norm = n * math.log(4.0) + math.log1p(-(4.0**-n))
    return k * math.log(3.0) + log_binom - log_norm


def stationary(n: int) -> WeightDistribution:
    if n < 2:
        raise ValueError(f"chain needs n >= 2, got {n}")
    mass = np.exp(log_stationary(n))
    return WeightDistribution(n, mass / math.fsum(mass))


def stationary_exact(n: int) -> list[Fraction]:
    total = 4**n - 1
    return [Fraction(3**k * math.comb(n, k), total) for k in range(1, n + 1)]


def evolve_exact(dist: WeightDistribution, t: int) -> WeightDistribution:
    """``dist @ P**t`` by ``t`` tridiagonal vector-matrix products."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return dist
    back, stay, fwd = BirthDeathChain(dist.n).rows()
    return WeightDistribution(dist.n, kernels.evolve_tridiagonal(back, stay, fwd, dist.mass, int(t)))


def evolve_rational(mass: list[Fraction], n: int, t: int) -> list[Fraction]:
    """Exact rational evolution, usable as an oracle for n <= 32."""
    rows = [transition_row_exact(n, x) for x in range(1, n + 1)]
    cur = list(mass)
    for _ in range(t):
        nxt = [Fraction(0)] * n
        for i, m in enumerate(cur):
            if not m:
                continue
            back, stay, fwd = rows[i]
            nxt[i] += m * stay
            if i > 0:
                nxt[i - 1] += m * back
            if i + 1 < n:
                nxt[i + 1] += m * fwd
        cur = nxt
    return cur


def threshold(n: int, f: float) -> int:
    return math.floor(f * n)


def tail_probability(n: int, ell: int, t: int, f: float) -> float:
    """Exact ``Pr[X_t(ell) <= floor(f n)]``."""
    _check_tail_args(n, ell, f)
    return evolve_exact(WeightDistribution.point(n, ell), t).mass_at_most(threshold(n, f))


def tail_curve(n: int, ell: int, times, f: float) -> np.ndarray:
    """Tail probability at each of the increasing ``times`` (one pass)."""
    _check_tail_args(n, ell, f)
    times = [int(s) for s in times]
    if any(b < a for a, b in zip(times, times[1:])) or (times and times[0] < 0):
        raise ValueError("times must be nonnegative and nondecreasing")
    dist = WeightDistribution.point(n, ell)
    out = []
    now = 0
    for s in times:
        dist = evolve_exact(dist, s - now)
        now = s
        out.append(dist.mass_at_most(threshold(n, f)))
    return np.array(out)


def _check_tail_args(n, ell, f):
    if not 1 <= ell <= n:
        raise ValueError(f"start weight {ell} outside 1..{n}")
    if not 0 < f < 0.5:
        raise ValueError(f"fraction f={f} outside (0, 1/2)")


def binary_entropy(f: float) -> float:
    if f <= 0 or f >= 1:
        return 0.0
    return -f * math.log2(f) - (1 - f) * math.log2(1 - f)


def _log2_comb(n: int, k: int) -> float:
    return float((gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)) / math.log(2))


def theorem_bound_first_term_log2(n: int, f: float) -> float:
    if not 0 < f < 0.5:
        raise ValueError(f"fraction f={f} outside (0, 1/2)")
    half = n // 2
    return (f * LOG2_3 + binary_entropy(f)) * n - _log2_comb(n, half) - half * LOG2_3


def theorem_bound_first_term(n: int, f: float) -> float:
    """``2^((f log2 3 + h(f)) n) / (C(n, n/2) 3^(n/2))``, n/2 rounded down."""
    return 2.0 ** theorem_bound_first_term_log2(n, f)


def valid_regime(f: float) -> bool:
    return f * LOG2_3 + binary_entropy(f) - LOG2_3 / 2 < 0


@dataclass(frozen=True)
class TheoremBound:
    """Both terms of the tail bound for a walk started at ``ell``.

    ``poly_exponent`` stands in for the unnamed polynomial of the second
    term, which is taken as ``n**poly_exponent``. It is a reporting knob,
    not a derived constant.
    """

    n: int
    ell: int
    f: float
    poly_exponent: int = 1

    @property
    def valid_regime(self) -> bool:
        return valid_regime(self.f)

    @property
    def first_term(self) -> float:
        return theorem_bound_first_term(self.n, self.f)

    @property
    def second_term_log2(self) -> float:
        return -(self.ell + _log2_comb(self.n, self.ell) + self.poly_exponent * math.log2(self.n))

    @property
    def second_term(self) -> float:
        return 2.0**self.second_term_log2

    @property
    def total(self) -> float:
        return self.first_term + self.second_term


def simulate_trajectory(n: int, ell: int, t: int, randomness) -> np.ndarray:
    """One sampled path ``X_0 = ell, ..., X_t`` of the weight chain."""
    if not 1 <= ell <= n:
        raise ValueError(f"start weight {ell} outside 1..{n}")
    rs = as_random_source(randomness)
    back, _, fwd = BirthDeathChain(n).rows()
    u = rs.gen.random(t)
    path = np.empty(t + 1, dtype=np.int64)
    x = ell
    path[0] = x
    for s in range(t):
        b = back[x - 1]
        if u[s] < b:
            x -= 1
        elif u[s] < b + fwd[x - 1]:
            x += 1
        path[s + 1] = x
    return path


def sample_positions(n: int, ell: int, t: int, trials: int, randomness) -> np.ndarray:
    """Final positions ``X_t(ell)`` of ``trials`` independent walks."""
    rs = as_random_source(randomness)
    back, _, fwd = BirthDeathChain(n).rows()
    x = np.full(trials, ell, dtype=np.int64)
    for _ in range(t):
        u = rs.gen.random(trials)
        b = back[x - 1]
        down = u < b
        up = ~down & (u < b + fwd[x - 1])
        x += up.astype(np.int64) - down.astype(np.int64)
    return x


def chain_spectral_gap(n: int) -> float:
    """One minus the second-largest eigenvalue modulus of the lumped chain.

    The chain is reversible with respect to ``pi``, so ``D^(1/2) P D^(-1/2)``
    is a symmetric tridiagonal matrix with off-diagonal
    ``sqrt(forward(x) * back(x + 1))``.
    """
    back, stay, fwd = BirthDeathChain(n).rows()
    off = np.sqrt(fwd[:-1] * back[1:])
    try:
        vals = eigh_tridiagonal(stay, off, eigvals_only=True)
    except LinAlgError as exc:
        raise EigensolverError(f"tridiagonal eigensolver failed for n={n}: {exc}") from exc
    mods = np.sort(np.abs(vals))
    return float(1.0 - mods[-2])
