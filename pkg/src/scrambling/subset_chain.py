"""Support growth of a Pauli under random matching circuits on the complete
graph.

Each level pairs the qubits by a uniform maximum matching. A pair that
touches the support keeps both qubits with probability 9/15, only the first
with 3/15 and only the second with 3/15; the draw is one of the 15
non-identity Pauli pairs, so this is the support projection of the Pauli
chain. A pair outside the support stays outside.

Because the matching is uniform, ``|S_t|`` is itself a Markov chain: given
``|S| = s`` with ``k`` pairs inside ``S``, the next size is ``a + Binomial(a,
9/15)`` with ``a = s - k`` active pairs. :func:`exact_size_distribution`
propagates that law exactly and serves as an oracle for the Monte Carlo
routines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom, binomtest

from . import kernels
from .circuits import LightconeViolation
from .pauli import OUTCOME_KEEPS_A, OUTCOME_KEEPS_B, sample_outcomes
from .rng import as_random_source

KEEP_BOTH = 9 / 15


@dataclass(frozen=True)
class SupportState:
    """Subset of ``range(n)`` stored as an integer bitmask."""

    n: int
    members: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.members < 0 or self.members >> self.n:
            raise ValueError("members outside range(n)")

    @classmethod
    def from_members(cls, n: int, members) -> "SupportState":
        mask = 0
        for q in members:
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} outside range({n})")
            mask |= 1 << int(q)
        return cls(n, mask)

    @classmethod
    def singleton(cls, n: int, q: int = 0) -> "SupportState":
        return cls.from_members(n, [q])

    @classmethod
    def from_array(cls, state) -> "SupportState":
        state = np.asarray(state)
        return cls.from_members(len(state), np.flatnonzero(state))

    @property
    def size(self) -> int:
        return self.members.bit_count()

    def __contains__(self, q: int) -> bool:
        return bool((self.members >> q) & 1)

    def __len__(self) -> int:
        return self.size

    def as_set(self) -> frozenset[int]:
        return frozenset(q for q in range(self.n) if (self.members >> q) & 1)

    def to_array(self) -> np.ndarray:
        bits = np.frombuffer(self.members.to_bytes((self.n + 7) // 8, "little"), dtype=np.uint8)
        return np.unpackbits(bits, bitorder="little")[: self.n].copy()


def validate_matching(n: int, matching) -> list[tuple[int, int]]:
    pairs = [(int(a), int(b)) for a, b in matching]
    seen: set[int] = set()
    for a, b in pairs:
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"bad pair ({a}, {b})")
        if a in seen or b in seen:
            raise ValueError("pairs overlap")
        seen.update((a, b))
    if len(pairs) != n // 2:
        raise ValueError(f"a maximum matching of {n} qubits has {n // 2} pairs, got {len(pairs)}")
    return pairs


def step(state: SupportState, matching, randomness) -> SupportState:
    """One level of the support chain under the given maximum matching."""
    pairs = validate_matching(state.n, matching)
    active = [(a, b) for a, b in pairs if a in state or b in state]
    outcomes = sample_outcomes(randomness, len(active))
    mask = state.members
    for (a, b), o in zip(active, outcomes):
        mask &= ~((1 << a) | (1 << b))
        mask |= int(OUTCOME_KEEPS_A[o]) << a | int(OUTCOME_KEEPS_B[o]) << b
    return SupportState(state.n, mask)


def _start_array(n: int, start) -> np.ndarray:
    if start is None:
        start = SupportState.singleton(n)
    if isinstance(start, SupportState):
        if start.n != n:
            raise ValueError("start state has the wrong n")
        return start.to_array()
    arr = np.asarray(start, dtype=np.uint8)
    if arr.shape != (n,):
        raise ValueError("start array must have length n")
    return arr


def check_trajectories(sizes: np.ndarray, n: int) -> None:
    """Closure, growth and light-cone checks on size trajectories."""
    sizes = np.atleast_2d(sizes)
    s0 = sizes[:, :1]
    if np.any(s0 > 0) and np.any(sizes[s0[:, 0] > 0] < 1):
        raise AssertionError("a nonempty support became empty")
    prev, nxt = sizes[:, :-1], sizes[:, 1:]
    if np.any(nxt > 2 * prev):
        raise LightconeViolation("support more than doubled in one level")
    if np.any(nxt < (prev + 1) // 2):
        raise AssertionError("support shrank below half in one level")
    t = np.arange(sizes.shape[1])
    env = np.minimum(s0 * 2.0 ** np.minimum(t, 64), n)
    if np.any(sizes > env):
        raise LightconeViolation("support exceeded the light-cone envelope")


def growth_batch(n: int, depth: int, trials: int, randomness, start=None):
    """``(sizes, final)`` for ``trials`` independent runs.

    ``sizes`` has shape ``(trials, depth + 1)``; ``final`` holds the
    membership bytes of ``S_depth``. Matchings and pair outcomes come from
    one splitmix64 stream per trial seeded from ``randomness``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if depth < 0 or trials < 1:
        raise ValueError("need depth >= 0 and trials >= 1")
    rs = as_random_source(randomness)
    init = _start_array(n, start)
    seeds = rs.gen.integers(0, 2**64, size=trials, dtype=np.uint64)
    sizes, final = kernels.matching_growth(n, depth, seeds, init, OUTCOME_KEEPS_A, OUTCOME_KEEPS_B)
    check_trajectories(sizes, n)
    return sizes, final


def simulate_growth(n: int, depth: int, randomness, start=None) -> np.ndarray:
    """``|S_t|`` for ``t = 0..depth`` along one run."""
    sizes, _ = growth_batch(n, depth, 1, randomness, start)
    return sizes[0]


@dataclass(frozen=True)
class Estimate:
    estimate: float
    ci_low: float
    ci_high: float
    successes: int
    trials: int
    reference: float | None = None


def wilson(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _estimate(successes: int, trials: int, reference=None) -> Estimate:
    lo, hi = wilson(successes, trials)
    return Estimate(successes / trials, lo, hi, int(successes), int(trials), reference)


def survival_probability(n: int, f: float, depth: int, trials: int, randomness, start=None) -> Estimate:
    """Monte Carlo ``Pr[|S_depth| <= floor(f n)]`` with a Wilson 95% interval."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sizes, _ = growth_batch(n, depth, trials, randomness, start)
    hits = int(np.count_nonzero(sizes[:, -1] <= math.floor(f * n)))
    return _estimate(hits, trials)


def coupon_check(n: int, depth: int, trials: int, c: int, randomness, f: float | None = None,
                 start=None, chunk: int = 512) -> Estimate:
    """Monte Carlo ``Pr[S_depth within T]`` for a uniform ``T`` of size ``n - c``.

    ``reference`` is ``(1 - f)**c`` when ``f`` is given.
    """
    if not 0 <= c <= n:
        raise ValueError(f"c={c} outside 0..n")
    rs = as_random_source(randomness)
    _, final = growth_batch(n, depth, trials, rs.child(0), start)
    gen = rs.child(1).gen
    hits = 0
    for lo in range(0, trials, chunk):
        block = final[lo : lo + chunk]
        if c == 0:
            hits += len(block)
            continue
        keys = gen.random((len(block), n))
        excluded = np.argpartition(keys, c - 1, axis=1)[:, :c]
        hits += int(np.count_nonzero(~np.take_along_axis(block, excluded, axis=1).any(axis=1)))
    return _estimate(hits, trials, None if f is None else (1.0 - f) ** c)


def _log_double_factorial_odd(m):
    # (2m - 1)!! = (2m)! / (2^m m!)
    m = np.asarray(m, dtype=np.float64)
    return gammaln(2 * m + 1) - m * math.log(2) - gammaln(m + 1)


def inner_pair_law(n: int, s: int) -> np.ndarray:
    """Law of the number of pairs inside an ``s``-subset under a uniform
    perfect matching of ``n`` (even) points; index ``k`` is that count."""
    if n % 2:
        raise ValueError("perfect matchings need even n")
    out = np.zeros(s // 2 + 1)
    k = np.arange(max(0, -((n - 2 * s) // 2)), s // 2 + 1)
    if k.size == 0:
        return out
    j = s - 2 * k  # marked points matched outside
    log_w = (
        gammaln(s + 1) - gammaln(2 * k + 1) - gammaln(j + 1)
        + _log_double_factorial_odd(k)
        + gammaln(n - s + 1) - gammaln(n - s - j + 1)
        + _log_double_factorial_odd((n - s - j) // 2)
        - _log_double_factorial_odd(n // 2)
    )
    out[k] = np.exp(log_w)
    return out / out.sum()


def _binomial_growth(n: int) -> np.ndarray:
    """``B[a, s']``: ``s' = a + Binomial(a, 9/15)``."""
    B = np.zeros((n + 1, n + 1))
    for a in range(n // 2 + 1):
        B[a, a : 2 * a + 1] = binom.pmf(np.arange(a + 1), a, KEEP_BOTH)
    return B


def _active_law(n: int, s: int, m: int, weight: float, out: np.ndarray) -> None:
    # m marked points among n (even); active pairs = m - inner pairs
    law = inner_pair_law(n, m)
    out[s, m - np.arange(len(law))] += weight * law


def exact_size_distribution(n: int, depth: int, start_size: int = 1) -> np.ndarray:
    """Exact law of ``|S_depth|`` (index = size) from any ``start_size`` subset.

    For odd ``n`` the idle qubit is uniform; when it lies in ``S`` it keeps
    its membership and the other ``s - 1`` members face a perfect matching
    of ``n - 1`` points.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 <= start_size <= n:
        raise ValueError("start_size outside 0..n")
    busy = np.zeros((n + 1, n + 1))
    idle = np.zeros((n + 1, n + 1))
    even = n - n % 2
    for s in range(n + 1):
        if n % 2 == 0:
            _active_law(even, s, s, 1.0, busy)
            continue
        if s >= 1:
            _active_law(even, s, s - 1, s / n, idle)
        if s <= even:
            _active_law(even, s, s, 1 - s / n, busy)
    B = _binomial_growth(n)
    dist = np.zeros(n + 1)
    dist[start_size] = 1.0
    for _ in range(depth):
        nxt = (dist @ busy) @ B
        if n % 2:
            nxt[1:] += ((dist @ idle) @ B)[:-1]
        dist = nxt
    return dist


def exact_survival(n: int, f: float, depth: int, start_size: int = 1) -> float:
    dist = exact_size_distribution(n, depth, start_size)
    return math.fsum(dist[: math.floor(f * n) + 1])


def exact_containment(n: int, depth: int, c: int, start_size: int = 1) -> float:
    """Exact ``Pr[S_depth within T]`` for uniform ``|T| = n - c``."""
    dist = exact_size_distribution(n, depth, start_size)
    s = np.arange(n + 1)
    log_ratio = np.full(n + 1, -np.inf)
    ok = n - s >= c
    log_ratio[ok] = (gammaln(n - s[ok] + 1) - gammaln(n - s[ok] - c + 1)) - (gammaln(n + 1) - gammaln(n - c + 1))
    return math.fsum(dist * np.exp(log_ratio))
