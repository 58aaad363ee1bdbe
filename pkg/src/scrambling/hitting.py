"""Gambler's-ruin hitting probabilities for inhomogeneous walks.

The walk lives on -1..a and starts at 0. At positions i >= 1 it steps right
with probability ``p_plus[i - 1]``; at position 0 it steps right with
probability ``p_minus``. Both ends are absorbing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln, logsumexp

from .rng import as_random_source
from .weight_chain import BirthDeathChain


@dataclass(frozen=True)
class WalkSpec:
    a: int
    p_minus: float
    p_plus: tuple

    def __post_init__(self):
        if self.a < 1:
            raise ValueError(f"right boundary a must be >= 1, got {self.a}")
        p_plus = tuple(float(p) for p in np.atleast_1d(self.p_plus)) if self.a > 1 else ()
        if len(p_plus) != self.a - 1:
            raise ValueError(f"p_plus needs a - 1 = {self.a - 1} entries, got {len(p_plus)}")
        for p in (self.p_minus, *p_plus):
            if not 0 < p < 1:
                raise ValueError(f"probability {p} outside (0, 1)")
        object.__setattr__(self, "p_plus", p_plus)

    @classmethod
    def uniform(cls, a: int, p: float, p_minus: float | None = None) -> "WalkSpec":
        return cls(a, p if p_minus is None else p_minus, (p,) * (a - 1))

    @classmethod
    def from_alphas(cls, a: int, alpha_minus: float, alpha_plus) -> "WalkSpec":
        alpha_plus = np.broadcast_to(np.asarray(alpha_plus, dtype=float), (a - 1,))
        return cls(a, alpha_minus / (1 + alpha_minus), tuple(alpha_plus / (1 + alpha_plus)))

    @property
    def log_alpha_minus(self) -> float:
        return math.log(self.p_minus) - math.log1p(-self.p_minus)

    @property
    def log_alpha_plus(self) -> np.ndarray:
        p = np.asarray(self.p_plus, dtype=float)
        return np.log(p) - np.log1p(-p)


def hitting_probability(spec: WalkSpec) -> float:
    """Probability of reaching -1 before ``a``.

    Equals ``1 / (1 + alpha_minus * prod_j alpha_plus(j) / (1 + sum_i prod_{j>=i} alpha_plus(j)))``.
    Dividing through by the full product, the ratio becomes ``1 / q`` with
    ``q = sum_{k=0}^{a-1} 1 / prod_{j<=k} alpha_plus(j)``, which is
    accumulated in log space.
    """
    cum = np.concatenate([[0.0], np.cumsum(spec.log_alpha_plus)])
    log_q = logsumexp(-cum)
    return float(expit(log_q - spec.log_alpha_minus))


def hitting_probability_uniform(alpha_minus: float, alpha_plus: float, a: int) -> float:
    """Closed form for constant ``alpha_plus``; ``alpha_plus == 1`` uses the limit ``1/(1 + alpha_minus/a)``."""
    if alpha_minus <= 0 or alpha_plus <= 0:
        raise ValueError("alphas must be positive")
    if a < 1:
        raise ValueError(f"a must be >= 1, got {a}")
    if alpha_plus == 1:
        return 1.0 / (1.0 + alpha_minus / a)
    # (A^a - A^(a-1)) / (A^a - 1) written to avoid overflow on either side of 1
    la = math.log(alpha_plus)
    if alpha_plus > 1:
        ratio = -math.expm1(-la) / -math.expm1(-a * la)
    else:
        ratio = math.exp((a - 1) * la) * -math.expm1(la) / -math.expm1(a * la)
    return 1.0 / (1.0 + alpha_minus * ratio)


def hitting_probability_mc(spec: WalkSpec, walks: int, randomness, max_steps: int = 1_000_000) -> float:
    """Monte Carlo estimate of :func:`hitting_probability`."""
    rs = as_random_source(randomness)
    right = np.concatenate([[spec.p_minus], spec.p_plus])  # indexed by position 0..a-1
    pos = np.zeros(walks, dtype=np.int64)
    alive = np.arange(walks)
    hit_left = 0
    for _ in range(max_steps):
        if alive.size == 0:
            break
        p = pos[alive]
        step = np.where(rs.gen.random(alive.size) < right[p], 1, -1)
        p = p + step
        pos[alive] = p
        left = p < 0
        hit_left += int(left.sum())
        alive = alive[~left & (p < spec.a)]
    else:
        raise RuntimeError("walks did not absorb within max_steps")
    return hit_left / walks


def _log_comb(n, k):
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def descent_bound(n: int, ell: int, m: int) -> float:
    """``(2n)^m / (2^ell C(n, ell))``: bound on reaching weight <= m before n/2."""
    _check_descent(n, ell, m)
    return math.exp(m * math.log(2 * n) - ell * math.log(2) - _log_comb(n, ell))


def _check_descent(n, ell, m):
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 1 <= ell <= n // 2:
        raise ValueError(f"start weight {ell} outside 1..n/2")
    if not 1 <= m <= ell:
        raise ValueError(f"m={m} outside 1..ell")


def thomas_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system. ``lower[0]`` and ``upper[-1]`` are ignored."""
    k = len(diag)
    c = np.zeros(k)
    d = np.zeros(k)
    for i in range(k):
        denom = diag[i] - (lower[i] * c[i - 1] if i else 0.0)
        c[i] = upper[i] / denom if i < k - 1 else 0.0
        d[i] = (rhs[i] - (lower[i] * d[i - 1] if i else 0.0)) / denom
    x = np.zeros(k)
    for i in range(k - 1, -1, -1):
        x[i] = d[i] - (c[i] * x[i + 1] if i < k - 1 else 0.0)
    return x


def descent_probability_exact(n: int, ell: int, m: int) -> float:
    """Probability that the weight chain started at ``ell`` visits a weight
    ``<= m`` at some step ``s >= 1`` before first reaching ``n // 2``.

    First-step analysis on the non-lazy chain with absorbing sets
    ``{<= m}`` (value 1) and ``{>= n//2}`` (value 0).
    """
    _check_descent(n, ell, m)
    if n > 2048:
        raise ValueError("exact descent is limited to n <= 2048")
    r = n // 2
    back, _, fwd = BirthDeathChain(n).rows()
    down = back / (back + fwd)  # index x - 1
    up = 1.0 - down
    h = np.zeros(n + 2)  # h[x] for x = 0..n+1
    h[: m + 1] = 1.0
    interior = np.arange(m + 1, r)
    if interior.size:
        # h(x) - down(x) h(x-1) - up(x) h(x+1) = 0 on m < x < r
        dx = down[interior - 1]
        ux = up[interior - 1]
        rhs = np.zeros(interior.size)
        rhs[0] += dx[0] * h[m]
        h[interior] = thomas_solve(-dx, np.ones(interior.size), -ux, rhs)
    return float(down[ell - 1] * h[ell - 1] + up[ell - 1] * h[ell + 1])


def chain_descent_probability(n: int, ell: int, m: int) -> tuple[float, float]:
    """``(bound, exact)`` for reaching weight <= m before n/2 from ``ell``."""
    return descent_bound(n, ell, m), descent_probability_exact(n, ell, m)
