"""Second-moment Markov chain on non-identity Pauli strings for small ``n``.

One gate on edge ``(i, j)`` fixes strings that are ``II`` there and
otherwise replaces the ``(i, j)`` pair by one of the 15 non-identity pairs
uniformly. Averaging over edges with weights ``q_ij`` gives the chain ``Q``.
Each edge term is an orthogonal projector, so ``Q`` is symmetric positive
semidefinite and the uniform vector is its top eigenvector.

States are base-4 integers (qubit 0 is the most significant digit, digits
0=I, 1=X, 2=Y, 3=Z) with the all-identity string removed, so state ``s``
sits at row ``s - 1``.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .circuits import InteractionGraph, site_index
from .weight_chain import EigensolverError, transition_row_exact

MAX_QUBITS = 8
DENSE_LIMIT = 4095


def edge_count_matrix(n: int, i: int, j: int) -> sparse.csr_matrix:
    """Integer matrix ``15 * Q_ij`` over the ``4^n - 1`` non-identity strings."""
    states = np.arange(1, 4**n)
    si, sj = 4 ** (n - 1 - i), 4 ** (n - 1 - j)
    di = (states // si) % 4
    dj = (states // sj) % 4
    active = (di | dj) != 0
    fixed = states[~active]
    src = states[active]
    base = src - di[active] * si - dj[active] * sj
    rows = [fixed]
    cols = [fixed]
    vals = [np.full(len(fixed), 15, dtype=np.int64)]
    for a, b in itertools.product(range(4), repeat=2):
        if a == b == 0:
            continue
        rows.append(src)
        cols.append(base + a * si + b * sj)
        vals.append(np.ones(len(src), dtype=np.int64))
    r = np.concatenate(rows) - 1
    c = np.concatenate(cols) - 1
    dim = 4**n - 1
    return sparse.csr_matrix((np.concatenate(vals), (r, c)), shape=(dim, dim))


@dataclass(frozen=True)
class PauliChainMatrix:
    """``Q = sum_e weights[e] * Q_e`` over ``edges``."""

    n: int
    edges: np.ndarray
    weights: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        if not 2 <= self.n <= MAX_QUBITS:
            raise ValueError(f"full Pauli chain needs 2 <= n <= {MAX_QUBITS}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=np.float64)
        if len(edges) != len(weights) or len(edges) == 0:
            raise ValueError("need one weight per edge and at least one edge")
        if np.any(weights <= 0) or abs(weights.sum() - 1) > 1e-12:
            raise ValueError("edge weights must be positive and sum to 1")
        if np.any(edges[:, 0] == edges[:, 1]) or edges.min() < 0 or edges.max() >= self.n:
            raise ValueError("edges must join two distinct qubits in 0..n-1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return 4**self.n - 1

    @property
    def uniform_weights(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        n = self.n
        full = np.zeros(4**n)
        full[1:] = np.ravel(v)
        t = full.reshape((4,) * n)
        out = np.zeros_like(t)
        for (i, j), w in zip(self.edges.tolist(), self.weights.tolist()):
            block = np.moveaxis(t, (i, j), (0, 1)).reshape(16, -1).copy()
            block[1:] = block[1:].mean(axis=0)
            out += w * np.moveaxis(block.reshape((4, 4) + (4,) * (n - 2)), (0, 1), (i, j))
        return out.reshape(-1)[1:]

    def operator(self) -> LinearOperator:
        return LinearOperator((self.dim, self.dim), matvec=self.matvec, dtype=np.float64)

    def count_matrix(self) -> sparse.csr_matrix:
        """``sum_e 15 Q_e`` with unit edge weights (integer entries)."""
        return sum(edge_count_matrix(self.n, i, j) for i, j in self.edges.tolist())

    def sparse(self) -> sparse.csr_matrix:
        return sum(
            (w / 15.0) * edge_count_matrix(self.n, i, j).astype(np.float64)
            for (i, j), w in zip(self.edges.tolist(), self.weights.tolist())
        )

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()

    def mix(self, other: "PauliChainMatrix", p: float) -> "PauliChainMatrix":
        """``p Q_self + (1 - p) Q_other``."""
        if other.n != self.n:
            raise ValueError("chains act on different numbers of qubits")
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        parts = [(self, p), (other, 1 - p)]
        edges = np.concatenate([c.edges for c, q in parts if q > 0])
        weights = np.concatenate([c.weights * q for c, q in parts if q > 0])
        return PauliChainMatrix(self.n, edges, weights / weights.sum(), f"mix({self.label},{other.label},{p:g})")


def build_chain(graph: InteractionGraph, n: int | None = None) -> PauliChainMatrix:
    n = graph.n if n is None else n
    if n != graph.n:
        raise ValueError("graph size does not match n")
    if n > MAX_QUBITS:
        raise ValueError(f"full Pauli chain is limited to n <= {MAX_QUBITS}")
    return PauliChainMatrix(n, graph.edges, graph.weights, graph.label())


def string_weights(n: int) -> np.ndarray:
    """Pauli weight of each state row."""
    states = np.arange(1, 4**n)
    w = np.zeros(len(states), dtype=np.int64)
    for q in range(n):
        w += (states // 4**q) % 4 != 0
    return w


def lumped_rows(chain: PauliChainMatrix) -> list[list[Fraction]] | None:
    """Exact weight-class rows if every string of a weight has the same
    class-to-class row (requires uniform edge weights); ``None`` otherwise."""
    if not chain.uniform_weights:
        raise ValueError("exact lumping needs uniform edge weights")
    n = chain.n
    c = chain.count_matrix().tocoo()
    w = string_weights(n)
    agg = np.zeros((chain.dim, n + 1), dtype=np.int64)
    np.add.at(agg, (c.row, w[c.col]), c.data)
    denom = 15 * len(chain.edges)
    rows = []
    for x in range(1, n + 1):
        block = agg[w == x]
        if np.any(block != block[0]):
            return None
        rows.append([Fraction(int(v), denom) for v in block[0]])
    return rows


def lumping_matches_weight_chain(chain: PauliChainMatrix) -> bool:
    """Projection onto weight classes equals the birth-death rows exactly."""
    rows = lumped_rows(chain)
    if rows is None:
        return False
    n = chain.n
    for x, row in enumerate(rows, start=1):
        back, stay, fwd = transition_row_exact(n, x)
        want = [Fraction(0)] * (n + 1)
        want[x - 1] += back
        want[x] += stay
        if x < n:
            want[x + 1] += fwd
        if row != want:
            return False
    return True


@dataclass(frozen=True)
class GapReport:
    n: int
    graph: str
    gap: float
    lambda2: float
    solver_residual: float
    solver: str = ""

    FIELDS = ("n", "graph", "gap", "lambda2", "solver_residual")

    def csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(
            [self.n, self.graph, f"{self.gap:.17g}", f"{self.lambda2:.17g}", f"{self.solver_residual:.17g}"]
        )
        return buf.getvalue()

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.FIELDS) + "\n"

    @classmethod
    def from_csv_row(cls, line: str) -> "GapReport":
        n, graph, gap, lam, res = next(csv.reader([line.strip()]))
        return cls(int(n), graph, float(gap), float(lam), float(res))

    def as_dict(self) -> dict:
        return asdict(self)


def _deflated(chain: PauliChainMatrix) -> LinearOperator:
    u = np.full(chain.dim, 1.0 / np.sqrt(chain.dim))

    def mv(v):
        v = np.ravel(v)
        return chain.matvec(v) - u * (u @ v)

    return LinearOperator((chain.dim, chain.dim), matvec=mv, dtype=np.float64)


def _residual(chain: PauliChainMatrix, vec: np.ndarray, lam: float) -> float:
    vec = vec / np.linalg.norm(vec)
    return float(np.linalg.norm(chain.matvec(vec) - lam * vec))


def spectral_gap(chain: PauliChainMatrix, solver: str = "auto", tol: float = 1e-10,
                 max_iter: int = 200_000, seed: int = 0) -> GapReport:
    """``lambda2`` = second-largest eigenvalue of ``Q``; ``gap = 1 - lambda2``.

    ``solver`` is ``"dense"`` (``eigh``), ``"lanczos"`` (ARPACK on ``Q``
    with the uniform eigenvector projected out) or ``"power"`` (power
    iteration on the same deflated operator; ``Q`` is positive
    semidefinite so the dominant deflated eigenvalue is ``lambda2``).
    ``"auto"`` picks dense up to dimension 4095 and Lanczos above.
    """
    if solver == "auto":
        solver = "dense" if chain.dim <= DENSE_LIMIT else "lanczos"
    if solver == "dense":
        vals, vecs = np.linalg.eigh(chain.dense())
        lam = float(vals[-2])
        res = _residual(chain, vecs[:, -2], lam)
    elif solver == "lanczos":
        rng = np.random.default_rng(seed)
        try:
            vals, vecs = eigsh(_deflated(chain), k=1, which="LA", tol=tol * 1e-2,
                               v0=rng.standard_normal(chain.dim), maxiter=max_iter)
        except ArpackNoConvergence as exc:
            raise EigensolverError(f"Lanczos did not converge for {chain.label}: {exc}") from exc
        lam = float(vals[0])
        res = _residual(chain, vecs[:, 0], lam)
    elif solver == "power":
        lam, res = _power_lambda2(chain, tol, max_iter, seed)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    if solver != "dense" and res > 1e-8:
        raise EigensolverError(f"{solver} residual {res:.3g} too large for {chain.label}")
    return GapReport(chain.n, chain.label, 1.0 - lam, lam, res, solver)


def _power_lambda2(chain: PauliChainMatrix, tol: float, max_iter: int, seed: int):
    op = _deflated(chain)
    v = np.random.default_rng(seed).standard_normal(chain.dim)
    v -= v.mean()
    v /= np.linalg.norm(v)
    lam, res = 0.0, np.inf
    for _ in range(max_iter):
        w = op.matvec(v)
        lam = float(v @ w)
        res = float(np.linalg.norm(w - lam * v))
        if res < tol:
            return lam, res
        v = w / np.linalg.norm(w)
    raise EigensolverError(f"power iteration stalled with residual {res:.3g}")


def convexity_check(chain1: PauliChainMatrix, chain2: PauliChainMatrix, p: float, **kwargs):
    """``(gap_mix, p gap1 + (1 - p) gap2, holds)`` for ``p Q1 + (1 - p) Q2``."""
    if chain1.n != chain2.n:
        raise ValueError("dimension mismatch")
    g1 = spectral_gap(chain1, **kwargs).gap
    g2 = spectral_gap(chain2, **kwargs).gap
    gm = spectral_gap(chain1.mix(chain2, p), **kwargs).gap
    lower = p * g1 + (1 - p) * g2
    return gm, lower, bool(gm >= lower - 1e-10)


def snake_order(d: int, side: int, fast_axis: int) -> list[int]:
    """Boustrophedon visit order of the ``side**d`` lattice, ``fast_axis``
    varying fastest; consecutive sites are nearest neighbors."""
    slow = [a for a in range(d) if a != fast_axis]
    order = slow + [fast_axis]  # most significant first
    out = []
    for k in range(side**d):
        coords = [0] * d
        rest = k
        digits = []
        for _ in range(d):
            digits.append(rest % side)
            rest //= side
        digits.reverse()  # digits[0] is the slowest
        higher = 0
        for pos, axis in enumerate(order):
            raw = digits[pos]
            coords[axis] = raw if higher % 2 == 0 else side - 1 - raw
            higher = higher * side + digits[pos]
        out.append(site_index(coords, side))
    return out


def path_decomposition(d: int, side: int) -> list[list[int]]:
    """``d`` snake paths, path ``i`` sweeping axis ``i``; together they use
    every lattice edge."""
    if d not in (1, 2, 3):
        raise ValueError("path decomposition supports d in {1, 2, 3}")
    if side < 2:
        raise ValueError("side must be >= 2")
    return [snake_order(d, side, axis) for axis in range(d)]


def path_edges(path) -> set[tuple[int, int]]:
    return {tuple(sorted(e)) for e in zip(path, path[1:])}


def covers_lattice(d: int, side: int, paths) -> bool:
    lattice = {tuple(sorted(e)) for e in InteractionGraph.lattice(d, side).edges.tolist()}
    used = set().union(*(path_edges(p) for p in paths))
    return used == lattice and all(sorted(p) == list(range(side**d)) for p in paths)


def line_chain(n: int) -> PauliChainMatrix:
    return build_chain(InteractionGraph.line(n))


def complete_chain(n: int) -> PauliChainMatrix:
    return build_chain(InteractionGraph.complete(n))
