import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from scrambling import circuits, subset_chain
from scrambling.circuits import CoarseGraining, Gate, InteractionGraph, LayeredCircuit

pairs = st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11)).filter(lambda p: p[0] != p[1]), max_size=60)


# graphs -----------------------------------------------------------------

def test_complete_graph():
    g = InteractionGraph.complete(5)
    assert g.n_edges == 10
    assert g.weights.sum() == pytest.approx(1)
    assert g.is_uniform


@pytest.mark.parametrize("d,side", [(1, 5), (2, 4), (3, 3)])
def test_lattice_edges_nearest_neighbor(d, side):
    g = InteractionGraph.lattice(d, side)
    assert g.n == side**d
    assert g.n_edges == d * side ** (d - 1) * (side - 1)
    for a, b in g.edges:
        ca = np.array(circuits.site_coords(int(a), d, side))
        cb = np.array(circuits.site_coords(int(b), d, side))
        assert np.abs(ca - cb).sum() == 1
    assert np.all(g.weights > 0) and g.weights.sum() == pytest.approx(1)


def test_explicit_graph_errors():
    with pytest.raises(ValueError):
        InteractionGraph.explicit(3, [(0, 0)])
    with pytest.raises(ValueError):
        InteractionGraph.explicit(3, [(0, 1), (1, 2)], [1.0, -1.0])


@given(st.integers(1, 3), st.integers(2, 6), st.data())
def test_site_index_round_trip(d, side, data):
    idx = data.draw(st.integers(0, side**d - 1))
    assert circuits.site_index(circuits.site_coords(idx, d, side), side) == idx


# samplers ---------------------------------------------------------------

def test_sequential_examples():
    assert circuits.sample_sequential_circuit(InteractionGraph.complete(5), 0, 1) == []
    gates = circuits.sample_sequential_circuit(InteractionGraph.complete(2), 50, 1)
    assert all({g.i, g.j} == {0, 1} for g in gates)
    assert all(0 <= g.clifford_id < 11520 for g in gates)


def test_sequential_edge_frequencies():
    g = InteractionGraph.explicit(4, [(0, 1), (1, 2), (2, 3), (0, 3)], [0.1, 0.2, 0.3, 0.4])
    t = 100_000
    gates = circuits.sample_sequential_circuit(g, t, 5)
    key = {tuple(sorted(map(int, e))): k for k, e in enumerate(g.edges)}
    counts = np.bincount([key[tuple(sorted((x.i, x.j)))] for x in gates], minlength=4)
    sigma = np.sqrt(t * g.weights * (1 - g.weights))
    assert np.all(np.abs(counts - t * g.weights) <= 3 * sigma)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 41), st.integers(0, 12), st.integers(0, 2**32))
def test_matching_circuit_levels(n, depth, seed):
    c = circuits.sample_matching_circuit(n, depth, seed)
    assert c.depth == depth
    c.validate()
    for level in c.levels:
        assert len(level) == n // 2
        used = {q for g in level for q in (g.i, g.j)}
        assert len(used) == 2 * (n // 2)


def test_matching_n2():
    c = circuits.sample_matching_circuit(2, 20, 3)
    assert all([{g.i, g.j} for g in lev] == [{0, 1}] for lev in c.levels)
    with pytest.raises(ValueError):
        circuits.sample_matching_circuit(1, 3, 0)


def test_matchings_of_k4_uniform():
    m = circuits.matching_pairs(4, 100_000, 9)
    # a perfect matching of K4 is named by the partner of qubit 0
    partner = np.where(m[:, :, 0] == 0, m[:, :, 1], np.where(m[:, :, 1] == 0, m[:, :, 0], -1)).max(axis=1)
    counts = np.bincount(partner, minlength=4)[1:]
    p = 1 / 3
    assert np.all(np.abs(counts / 1e5 - p) <= 3 * math.sqrt(p * (1 - p) / 1e5))


def test_pair_marginal_even_n():
    n, levels = 10, 40_000
    m = circuits.matching_pairs(n, levels, 17)
    hit = np.any(((m[:, :, 0] == 2) & (m[:, :, 1] == 7)) | ((m[:, :, 0] == 7) & (m[:, :, 1] == 2)), axis=1)
    p = 1 / (n - 1)
    assert abs(hit.mean() - p) <= 3 * math.sqrt(p * (1 - p) / levels)


def test_odd_n_idle_uniform():
    n, levels = 7, 70_000
    m = circuits.matching_pairs(n, levels, 23)
    used = np.zeros((levels, n), dtype=bool)
    np.put_along_axis(used, m.reshape(levels, -1), True, axis=1)
    assert np.all((~used).sum(axis=1) == 1)
    idle = np.argmax(~used, axis=1)
    assert stats.chisquare(np.bincount(idle, minlength=n)).pvalue > 1e-3


# coarse lattice ---------------------------------------------------------

@pytest.mark.parametrize("d,side,cs", [(1, 8, 2), (1, 12, 4), (2, 6, 3), (2, 8, 4), (3, 4, 2)])
def test_cells_tile(d, side, cs):
    cg = CoarseGraining(d, side, cs)
    for parity in (1, 2):
        cells = cg.cells(parity)
        allsites = np.sort(np.concatenate(cells))
        assert np.array_equal(allsites, np.arange(cg.n))


def test_type2_midpoints_are_type1_corners():
    cg = CoarseGraining(2, 8, 4)
    corners = {circuits.site_coords(int(c[0]), 2, 8) for c in cg.cells(1)}
    # a full-size type-2 cell starting at h = 2 spans a type-1 corner at its middle
    full = [c for c in cg.cells(2) if len(c) == 16]
    for cell in full:
        lo = np.min([circuits.site_coords(int(s), 2, 8) for s in cell], axis=0)
        mid = tuple(int(v) + 2 for v in lo)
        assert mid in corners


def test_coarse_circuit_example():
    cg = CoarseGraining(1, 4, 2)
    c = circuits.sample_coarse_lattice_circuit(cg, 1, 5, 1)
    assert all({g.i, g.j} in ({0, 1}, {2, 3}) for g in c.flatten())
    assert c.depth == 5 and c.gate_count == 10


def test_coarse_circuit_alternates():
    cg = CoarseGraining(1, 8, 4)
    c = circuits.sample_coarse_lattice_circuit(cg, 2, 30, 2)
    first = c.flatten()[: 2 * 30]
    second = c.flatten()[2 * 30 :]
    cells1 = [set(x.tolist()) for x in cg.cells(1)]
    assert all(any({g.i, g.j} <= cell for cell in cells1) for g in first)
    # the offset step has a gate crossing the first step's cell boundary (3, 4)
    assert any({g.i, g.j} == {3, 4} for g in second)


@pytest.mark.parametrize("d,side,cs,steps,g", [(1, 12, 4, 3, 7), (2, 6, 3, 2, 5), (2, 8, 4, 4, 3)])
def test_coarse_gate_count_and_locality(d, side, cs, steps, g):
    cg = CoarseGraining(d, side, cs)
    c = circuits.sample_coarse_lattice_circuit(cg, steps, g, 6)
    c.validate()
    want = sum(len(cg.cell_edges(1 if s % 2 == 0 else 2)) for s in range(steps)) * g
    assert c.gate_count == want
    if all(len(cg.cells(p)) == len(cg.cell_edges(p)) for p in (1, 2)):
        assert c.gate_count == sum(len(cg.cells(1 if s % 2 == 0 else 2)) for s in range(steps)) * g
    for gate in c.flatten():
        a = np.array(circuits.site_coords(gate.i, d, side))
        b = np.array(circuits.site_coords(gate.j, d, side))
        assert np.abs(a - b).sum() == 1


def test_coarse_errors():
    with pytest.raises(ValueError):
        CoarseGraining(1, 10, 3)
    with pytest.raises(ValueError):
        CoarseGraining(1, 10, 1)
    with pytest.raises(ValueError):
        circuits.sample_coarse_lattice_circuit(CoarseGraining(1, 4, 2), 0, 3, 0)


def test_defaults():
    assert 12 % circuits.default_cell_side(1, 12) == 0
    assert circuits.default_gates_per_coarse_step(64) == math.ceil(3 * math.log(64) ** 2)


# parallelize ------------------------------------------------------------

def test_parallelize_examples():
    c = circuits.parallelize([(1, 2), (3, 4), (1, 3)])
    assert [[(g.i, g.j) for g in lev] for lev in c.levels] == [[(1, 2), (3, 4)], [(1, 3)]]
    assert circuits.parallelize([(1, 2), (1, 3), (1, 4)]).depth == 3
    assert circuits.parallelize([]).depth == 0


@given(pairs)
def test_parallelize_properties(ps):
    gates = [Gate(a, b, k) for k, (a, b) in enumerate(ps)]
    c = circuits.parallelize(gates)
    c.validate()
    assert c.flatten() == gates
    mult = max((sum(q in (g.i, g.j) for g in gates) for q in range(12)), default=0)
    assert mult <= c.depth <= len(gates)
    for q in range(12):
        assert [g for g in c.flatten() if q in (g.i, g.j)] == [g for g in gates if q in (g.i, g.j)]


def test_depth_statistics():
    s = circuits.depth_statistics(2, 5, 20, 0)
    assert s["min"] == s["max"] == 5
    s = circuits.depth_statistics(64, 300, 30, 1)
    assert s["min"] >= math.ceil(300 / 32)
    assert s["q50"] <= s["q90"] <= s["q99"] <= s["max"]


# light cone -------------------------------------------------------------

def test_envelope_examples():
    assert circuits.lightcone_envelope(3, 1024).tolist() == [1, 2, 4, 8]
    assert circuits.lightcone_envelope(0, 50).tolist() == [1]
    env = circuits.lightcone_envelope(6, 36, d=2)
    assert env.tolist() == [1, 2, 4, 8, 16, 32, 36]
    env = circuits.lightcone_envelope(40, 10**6, d=1)
    assert env[-1] == 80


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 200), st.integers(0, 12), st.integers(0, 2**32))
def test_matching_trajectories_inside_envelope(n, depth, seed):
    c = circuits.sample_matching_circuit(n, depth, seed)
    env = circuits.lightcone_lower_bound_check(c, 0, randomness=seed, trials=3)
    cone = circuits.causal_cone(c, 0)
    assert np.all(cone <= env)
    assert np.all(np.diff(cone) >= 0)


def test_lattice_trajectories_inside_envelope():
    cg = CoarseGraining(2, 8, 4)
    c = circuits.sample_coarse_lattice_circuit(cg, 3, 6, 4)
    circuits.lightcone_lower_bound_check(c, 27, randomness=1, trials=5, d=2)


def test_violation_detected():
    c = LayeredCircuit(8, [[Gate(0, 1)], [Gate(1, 2)]])
    with pytest.raises(circuits.LightconeViolation):
        circuits.lightcone_lower_bound_check(c, 0, trajectories=[[1, 2, 5]])


# serialization -------------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(st.integers(2, 30), st.integers(0, 8), st.integers(0, 2**63 - 1))
def test_circuit_round_trip(n, depth, seed):
    c = circuits.sample_matching_circuit(n, depth, seed)
    text = circuits.write_circuit(c, model="matching", seed=seed)
    back, header = circuits.read_circuit(text)
    assert back == c
    assert header["n"] == str(n) and header["model"] == "matching" and header["seed"] == str(seed)
    assert circuits.write_circuit(back, model="matching", seed=seed) == text


def test_circuit_file_round_trip(tmp_path):
    c = circuits.parallelize(circuits.sample_sequential_circuit(InteractionGraph.complete(6), 40, 2), 6)
    path = tmp_path / "c.txt"
    with open(path, "w") as fh:
        circuits.write_circuit(c, fh, model="sequential", seed=2)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("n=6 model=sequential seed=2")
    assert len(lines) == 41
    with open(path) as fh:
        back, _ = circuits.read_circuit(fh)
    assert back == c


def test_empty_levels_survive_round_trip():
    c = LayeredCircuit(4, [[Gate(0, 1, 5)], [], [Gate(2, 3, 7)], []])
    back, _ = circuits.read_circuit(circuits.write_circuit(c))
    assert back == c
