"""Interaction graphs, random circuit samplers, greedy parallelization and
light-cone envelopes."""
from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels
from .clifford import GROUP_ORDER
from .pauli import OUTCOME_KEEPS_A, OUTCOME_KEEPS_B
from .rng import as_random_source


class Gate(NamedTuple):
    i: int
    j: int
    clifford_id: int = 0


@dataclass(frozen=True)
class InteractionGraph:
    """Weighted edge set over qubits ``0..n-1``.

    ``kind`` is ``"complete"``, ``"lattice"`` or ``"explicit"``. The complete
    graph keeps its edges implicit so that large ``n`` stays cheap to sample.
    """

    n: int
    kind: str
    d: int = 0
    side: int = 0
    _edges: np.ndarray | None = field(default=None, repr=False)
    _weights: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def complete(cls, n: int) -> "InteractionGraph":
        if n < 2:
            raise ValueError("complete graph needs n >= 2")
        return cls(n, "complete")

    @classmethod
    def lattice(cls, d: int, side: int) -> "InteractionGraph":
        if d < 1 or side < 2:
            raise ValueError("lattice needs d >= 1 and side >= 2")
        return cls(side**d, "lattice", d=d, side=side, _edges=lattice_edges(d, side))

    @classmethod
    def line(cls, n: int) -> "InteractionGraph":
        return cls.lattice(1, n)

    @classmethod
    def explicit(cls, n: int, edges, weights=None) -> "InteractionGraph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(e) == 0:
            raise ValueError("graph has no edges")
        if np.any(e[:, 0] == e[:, 1]) or e.min() < 0 or e.max() >= n:
            raise ValueError("edges must join two distinct qubits in 0..n-1")
        w = None
        if weights is not None:
            w = np.asarray(weights, dtype=np.float64)
            if w.shape != (len(e),) or np.any(w <= 0):
                raise ValueError("need one positive weight per edge")
            w = w / w.sum()
        return cls(n, "explicit", _edges=e, _weights=w)

    @property
    def edges(self) -> np.ndarray:
        if self._edges is None:
            return np.array(list(itertools.combinations(range(self.n), 2)), dtype=np.int64)
        return self._edges

    @property
    def n_edges(self) -> int:
        if self._edges is None:
            return self.n * (self.n - 1) // 2
        return len(self._edges)

    @property
    def weights(self) -> np.ndarray:
        if self._weights is None:
            return np.full(self.n_edges, 1.0 / self.n_edges)
        return self._weights

    @property
    def is_uniform(self) -> bool:
        return self._weights is None

    def label(self) -> str:
        if self.kind == "lattice":
            return f"lattice{self.d}d_{self.side}"
        return f"{self.kind}{self.n}"

    def sample_pairs(self, count: int, randomness) -> tuple[np.ndarray, np.ndarray]:
        gen = as_random_source(randomness).gen
        if self.kind == "complete":
            a = gen.integers(0, self.n, size=count)
            b = gen.integers(0, self.n - 1, size=count)
            b = b + (b >= a)
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            return lo.astype(np.int32), hi.astype(np.int32)
        if self.is_uniform:
            idx = gen.integers(0, self.n_edges, size=count)
        else:
            idx = gen.choice(self.n_edges, size=count, p=self.weights)
        e = self.edges[idx]
        return e[:, 0].astype(np.int32), e[:, 1].astype(np.int32)


def site_index(coords, side: int) -> int:
    idx = 0
    for c in coords:
        idx = idx * side + c
    return idx


def site_coords(index: int, d: int, side: int) -> tuple[int, ...]:
    out = []
    for _ in range(d):
        index, c = divmod(index, side)
        out.append(c)
    return tuple(reversed(out))


def lattice_edges(d: int, side: int) -> np.ndarray:
    """Nearest-neighbor edges of the open ``side**d`` lattice (row-major sites)."""
    n = side**d
    idx = np.arange(n).reshape((side,) * d)
    edges = []
    for axis in range(d):
        lo = np.take(idx, range(side - 1), axis=axis).ravel()
        hi = np.take(idx, range(1, side), axis=axis).ravel()
        edges.append(np.stack([lo, hi], axis=1))
    return np.concatenate(edges).astype(np.int64)


@dataclass
class LayeredCircuit:
    n: int
    levels: list[list[Gate]]

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def gate_count(self) -> int:
        return sum(len(level) for level in self.levels)

    def flatten(self) -> list[Gate]:
        return [g for level in self.levels for g in level]

    def validate(self) -> None:
        for k, level in enumerate(self.levels):
            used = set()
            for g in level:
                if g.i == g.j or not (0 <= g.i < self.n and 0 <= g.j < self.n):
                    raise ValueError(f"level {k}: bad gate {g}")
                if g.i in used or g.j in used:
                    raise ValueError(f"level {k}: gates overlap on a qubit")
                used.update((g.i, g.j))

    def arrays(self):
        """``(qa, qb, cid, level_ends)`` arrays for the kernels."""
        flat = self.flatten()
        qa = np.fromiter((g.i for g in flat), dtype=np.int32, count=len(flat))
        qb = np.fromiter((g.j for g in flat), dtype=np.int32, count=len(flat))
        cid = np.fromiter((g.clifford_id for g in flat), dtype=np.int32, count=len(flat))
        ends = np.cumsum([len(level) for level in self.levels], dtype=np.int64)
        return qa, qb, cid, ends


def _gates(qa, qb, cid) -> list[Gate]:
    return [Gate(int(a), int(b), int(c)) for a, b, c in zip(qa, qb, cid)]


def sample_sequential_circuit(graph: InteractionGraph, t: int, randomness) -> list[Gate]:
    """``t`` gates, each on an edge drawn by weight with a uniform Clifford."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if graph.n_edges == 0:
        raise ValueError("graph has no edges")
    rs = as_random_source(randomness)
    qa, qb = graph.sample_pairs(t, rs)
    cid = rs.gen.integers(0, GROUP_ORDER, size=t)
    return _gates(qa, qb, cid)


def matching_pairs(n: int, depth: int, randomness) -> np.ndarray:
    """Uniform random maximum matchings, shape ``(depth, n // 2, 2)``.

    Each level pairs consecutive entries of a uniform permutation; for odd
    ``n`` the last entry idles.
    """
    if n < 2:
        raise ValueError("matching needs n >= 2")
    gen = as_random_source(randomness).gen
    perms = gen.permuted(np.tile(np.arange(n, dtype=np.int32), (depth, 1)), axis=1)
    half = n // 2
    return perms[:, : 2 * half].reshape(depth, half, 2)


def sample_matching_circuit(n: int, depth: int, randomness) -> LayeredCircuit:
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    rs = as_random_source(randomness)
    pairs = matching_pairs(n, depth, rs)
    cid = rs.gen.integers(0, GROUP_ORDER, size=pairs.shape[:2])
    levels = [_gates(p[:, 0], p[:, 1], c) for p, c in zip(pairs, cid)]
    return LayeredCircuit(n, levels)


@dataclass(frozen=True)
class CoarseGraining:
    """Cells of ``cell_side**d`` sites; type-2 cells are shifted by
    ``cell_side // 2`` along every axis and truncated at the open boundary."""

    d: int
    side: int
    cell_side: int

    def __post_init__(self):
        if self.cell_side < 2:
            raise ValueError("cell_side must be >= 2")
        if self.side % self.cell_side:
            raise ValueError(f"cell_side {self.cell_side} does not divide side {self.side}")

    @property
    def n(self) -> int:
        return self.side**self.d

    def _intervals(self, parity: int) -> list[range]:
        cs = self.cell_side
        if parity == 1:
            return [range(s, s + cs) for s in range(0, self.side, cs)]
        h = cs // 2
        starts = [0] + list(range(h, self.side, cs))
        return [range(s, min(e, self.side)) for s, e in zip(starts, starts[1:] + [self.side])]

    def cells(self, parity: int) -> list[np.ndarray]:
        """Site indices of each cell of type ``parity`` (1 or 2)."""
        if parity not in (1, 2):
            raise ValueError("parity must be 1 or 2")
        out = []
        for box in itertools.product(self._intervals(parity), repeat=self.d):
            out.append(np.array([site_index(c, self.side) for c in itertools.product(*box)]))
        return out

    def cell_edges(self, parity: int) -> list[np.ndarray]:
        """Internal nearest-neighbor edges of every cell that has any."""
        edges = lattice_edges(self.d, self.side)
        label = np.empty(self.n, dtype=np.int64)
        for k, cell in enumerate(self.cells(parity)):
            label[cell] = k
        same = label[edges[:, 0]] == label[edges[:, 1]]
        inside = edges[same]
        groups = label[inside[:, 0]]
        return [inside[groups == k] for k in np.unique(groups)]


def default_cell_side(d: int, side: int, c: float = 2.0) -> int:
    """Smallest divisor of ``side`` that is at least ``ceil((c ln n)^(1/d))``."""
    n = side**d
    target = max(2, math.ceil((c * math.log(n)) ** (1.0 / d)))
    for s in range(target, side + 1):
        if side % s == 0:
            return s
    return side


def default_gates_per_coarse_step(n: int, c: float = 3.0) -> int:
    return max(1, math.ceil(c * math.log(n) ** 2))


def sample_coarse_lattice_circuit(
    cg: CoarseGraining, coarse_steps: int, gates_per_coarse_step: int, randomness
) -> LayeredCircuit:
    """Alternate type-1 / type-2 cells; each active cell gets
    ``gates_per_coarse_step`` sequential gates on random internal edges, and
    the k-th gate of every cell shares level k of the coarse step."""
    if coarse_steps < 1:
        raise ValueError("coarse_steps must be >= 1")
    rs = as_random_source(randomness)
    by_parity = {p: cg.cell_edges(p) for p in (1, 2)}
    levels: list[list[Gate]] = []
    for step in range(coarse_steps):
        cells = by_parity[1 if step % 2 == 0 else 2]
        g = gates_per_coarse_step
        picks = [e[rs.gen.integers(0, len(e), size=g)] for e in cells]
        cids = rs.gen.integers(0, GROUP_ORDER, size=(len(cells), g))
        for k in range(g):
            levels.append(
                [Gate(int(p[k, 0]), int(p[k, 1]), int(cids[c, k])) for c, p in enumerate(picks)]
            )
    return LayeredCircuit(cg.n, levels)


def parallelize(gates: Iterable[Gate], n: int | None = None) -> LayeredCircuit:
    """Greedy single-pass leveling: a gate joins the current level unless it
    shares a qubit with a gate already there, in which case a new level starts."""
    gates = [Gate(*g) if len(g) == 3 else Gate(g[0], g[1]) for g in gates]
    if not gates:
        return LayeredCircuit(n or 0, [])
    qa = np.array([g.i for g in gates], dtype=np.int32)
    qb = np.array([g.j for g in gates], dtype=np.int32)
    size = int(max(qa.max(), qb.max())) + 1
    if n is None:
        n = size
    level = kernels.greedy_levels(qa, qb, max(n, size))
    levels: list[list[Gate]] = [[] for _ in range(int(level[-1]) + 1)]
    for g, lev in zip(gates, level.tolist()):
        levels[lev].append(g)
    return LayeredCircuit(n, levels)


def parallel_depth(qa: np.ndarray, qb: np.ndarray, n: int) -> int:
    if len(qa) == 0:
        return 0
    return int(kernels.greedy_levels(qa, qb, n)[-1]) + 1


def depth_statistics(n: int, t: int, trials: int, randomness) -> dict:
    """Parallelized depth of ``trials`` sequential complete-graph circuits."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rs = as_random_source(randomness)
    graph = InteractionGraph.complete(n)
    depths = np.empty(trials, dtype=np.int64)
    for k in range(trials):
        qa, qb = graph.sample_pairs(t, rs.child(k))
        depths[k] = parallel_depth(qa, qb, n)
    return {
        "n": n,
        "t": t,
        "trials": trials,
        "mean": float(depths.mean()),
        "q50": float(np.quantile(depths, 0.5)),
        "q90": float(np.quantile(depths, 0.9)),
        "q99": float(np.quantile(depths, 0.99)),
        "max": int(depths.max()),
        "min": int(depths.min()),
        "depths": depths,
    }


class LightconeViolation(AssertionError):
    pass


def lightcone_envelope(depth: int, n: int, d: int | None = None) -> np.ndarray:
    """Upper bound on the support of an evolved weight-1 Pauli after each of
    ``0..depth`` levels of two-qubit gates.

    Support at most doubles per level; on a ``d``-dimensional lattice it
    also stays within ``(2 t)^d`` sites for ``t >= 1``. Capped at ``n``.
    """
    t = np.arange(depth + 1)
    env = np.minimum(2.0 ** np.minimum(t, 64), n)
    if d is not None:
        geo = np.where(t == 0, 1.0, (2.0 * t) ** d)
        env = np.minimum(env, geo)
    return env.astype(np.int64)


def causal_cone(circuit: LayeredCircuit, start: int) -> np.ndarray:
    """Exact size of the set of qubits causally reachable from ``start``."""
    reach = np.zeros(circuit.n, dtype=bool)
    reach[start] = True
    sizes = [1]
    for level in circuit.levels:
        for g in level:
            if reach[g.i] or reach[g.j]:
                reach[g.i] = reach[g.j] = True
        sizes.append(int(reach.sum()))
    return np.array(sizes)


def support_trajectory(circuit: LayeredCircuit, start: int, randomness) -> np.ndarray:
    """Sampled Pauli support size after each level, starting from weight 1 at
    ``start``; every active gate draws one of the 15 non-identity pairs."""
    rs = as_random_source(randomness)
    qa, qb, _, ends = circuit.arrays()
    state = np.zeros(circuit.n, dtype=np.uint8)
    state[start] = 1
    outcome = rs.gen.integers(0, 15, size=len(qa), dtype=np.uint8)
    return kernels.propagate_support(state, qa, qb, outcome, ends, OUTCOME_KEEPS_A, OUTCOME_KEEPS_B)


def lightcone_lower_bound_check(
    circuit: LayeredCircuit, start_qubit: int, randomness=0, trials: int = 1, d: int | None = None,
    trajectories=(),
) -> np.ndarray:
    """Per-level envelope; raises :class:`LightconeViolation` if the causal
    cone, a sampled support trajectory, or any given trajectory exceeds it."""
    env = lightcone_envelope(circuit.depth, circuit.n, d)
    rs = as_random_source(randomness)
    checks = [("causal cone", causal_cone(circuit, start_qubit))]
    checks += [(f"sampled trajectory {k}", support_trajectory(circuit, start_qubit, rs.child(k))) for k in range(trials)]
    checks += [(f"given trajectory {k}", np.asarray(tr)) for k, tr in enumerate(trajectories)]
    for name, sizes in checks:
        bad = np.flatnonzero(sizes[: len(env)] > env[: len(sizes)])
        if bad.size:
            lev = int(bad[0])
            raise LightconeViolation(f"{name}: support {sizes[lev]} > envelope {env[lev]} at level {lev}")
    return env


def write_circuit(circuit: LayeredCircuit, fh=None, model: str = "custom", seed: int | None = None) -> str | None:
    """Line format: header ``n=<n> model=<kind> seed=<seed> depth=<depth>``,
    then one ``level i j clifford_id`` line per gate."""
    out = fh or io.StringIO()
    out.write(f"n={circuit.n} model={model} seed={'' if seed is None else seed} depth={circuit.depth}\n")
    for k, level in enumerate(circuit.levels):
        for g in level:
            out.write(f"{k} {g.i} {g.j} {g.clifford_id}\n")
    if fh is None:
        return out.getvalue()
    return None


def read_circuit(source) -> tuple[LayeredCircuit, dict]:
    text = source if isinstance(source, str) else source.read()
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty circuit file")
    header = dict(tok.split("=", 1) for tok in lines[0].split())
    n = int(header["n"])
    depth = int(header.get("depth", 0))
    levels: list[list[Gate]] = [[] for _ in range(depth)]
    for line in lines[1:]:
        if not line.strip():
            continue
        k, i, j, c = (int(v) for v in line.split())
        while k >= len(levels):
            levels.append([])
        levels[k].append(Gate(i, j, c))
    return LayeredCircuit(n, levels), header
