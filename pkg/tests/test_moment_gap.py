import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scrambling import clifford, moment_gap as mg
from scrambling import weight_chain as wc
from scrambling.circuits import InteractionGraph
from scrambling.moment_gap import GapReport

_BITS = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
_DIGIT = {v: k for k, v in _BITS.items()}


def _twirl_oracle(n, edges, weights):
    """Q from averaging the Clifford tables over all 11520 gates on each edge."""
    image, _ = clifford.tables()
    dim = 4**n - 1
    q = np.zeros((dim, dim))
    for (i, j), w in zip(edges, weights):
        for s in range(1, 4**n):
            digits = [(s // 4 ** (n - 1 - k)) % 4 for k in range(n)]
            (xa, za), (xb, zb) = _BITS[digits[i]], _BITS[digits[j]]
            v = xa | za << 1 | xb << 2 | zb << 3
            counts = np.bincount(image[:, v], minlength=16)
            for u in np.flatnonzero(counts):
                d2 = list(digits)
                d2[i] = _DIGIT[(u & 1, u >> 1 & 1)]
                d2[j] = _DIGIT[(u >> 2 & 1, u >> 3 & 1)]
                t = sum(d * 4 ** (n - 1 - k) for k, d in enumerate(d2))
                q[s - 1, t - 1] += w * counts[u] / clifford.GROUP_ORDER
    return q


def test_single_edge_uniform():
    q = mg.complete_chain(2).dense()
    assert np.allclose(q, 1 / 15, atol=1e-15)


@pytest.mark.parametrize("graph", [InteractionGraph.line(3), InteractionGraph.complete(3),
                                   InteractionGraph.explicit(3, [(0, 2), (1, 2)], [0.3, 0.7])])
def test_chain_matches_clifford_twirl(graph):
    chain = mg.build_chain(graph)
    want = _twirl_oracle(3, graph.edges.tolist(), graph.weights.tolist())
    assert np.abs(chain.dense() - want).max() < 1e-14


@pytest.mark.parametrize("n", [2, 3, 4])
def test_chain_invariants(n):
    for chain in (mg.line_chain(n), mg.complete_chain(n)):
        q = chain.dense()
        assert np.all(q >= 0)
        assert np.abs(q.sum(axis=1) - 1).max() <= 1e-12
        assert np.array_equal(q, q.T)
        counts = chain.count_matrix()
        assert np.all(np.asarray(counts.sum(axis=1)).ravel() == 15 * len(chain.edges))
        v = np.random.default_rng(n).standard_normal(chain.dim)
        assert np.abs(chain.matvec(v) - q @ v).max() < 1e-13


def test_chain_errors():
    with pytest.raises(ValueError):
        mg.build_chain(InteractionGraph.complete(9))
    with pytest.raises(ValueError):
        mg.build_chain(InteractionGraph.complete(4), 5)
    with pytest.raises(ValueError):
        mg.complete_chain(3).mix(mg.complete_chain(4), 0.5)


def test_gap_n2():
    r = mg.spectral_gap(mg.complete_chain(2))
    assert r.gap == pytest.approx(1, abs=1e-12)
    vals = np.linalg.eigvalsh(mg.complete_chain(2).dense())
    assert np.sum(np.abs(vals) < 1e-12) == 14


@pytest.mark.parametrize("n", [3, 4, 5])
def test_solvers_agree(n):
    chain = mg.line_chain(n)
    d = mg.spectral_gap(chain, "dense")
    lz = mg.spectral_gap(chain, "lanczos")
    pw = mg.spectral_gap(chain, "power", tol=1e-11)
    assert lz.gap == pytest.approx(d.gap, abs=1e-9)
    assert pw.gap == pytest.approx(d.gap, abs=1e-8)
    assert 0 < d.gap <= 1 and d.gap == pytest.approx(1 - d.lambda2)
    assert d.solver_residual < 1e-10


def test_top_eigenvector_uniform():
    chain = mg.line_chain(4)
    u = np.ones(chain.dim)
    assert np.abs(chain.matvec(u) - u).max() < 1e-14
    assert np.linalg.eigvalsh(chain.dense()).max() == pytest.approx(1, abs=1e-12)


def test_gap_positive_connected():
    for graph in (InteractionGraph.line(4), InteractionGraph.lattice(2, 2),
                  InteractionGraph.explicit(4, [(0, 1), (0, 2), (0, 3)])):
        assert mg.spectral_gap(mg.build_chain(graph)).gap > 1e-6
    disconnected = mg.build_chain(InteractionGraph.explicit(4, [(0, 1), (2, 3)]))
    assert mg.spectral_gap(disconnected).gap < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_lumping_complete(n):
    assert mg.lumping_matches_weight_chain(mg.complete_chain(n))


def test_lumping_fails_for_line():
    rows = mg.lumped_rows(mg.line_chain(4))
    assert rows is None


def test_lumped_gap_is_a_chain_eigenvalue():
    # the lumped chain's spectrum is contained in the full one
    n = 4
    full = np.linalg.eigvalsh(mg.complete_chain(n).dense())
    lumped = np.linalg.eigvals(wc.BirthDeathChain(n).dense()).real
    for lam in lumped:
        assert np.min(np.abs(full - lam)) < 1e-10


def test_complete_vs_line_n6():
    gl = mg.spectral_gap(mg.line_chain(6), "lanczos").gap
    gc = mg.spectral_gap(mg.complete_chain(6), "lanczos").gap
    assert 1 / 3 < gc / gl < 3


def test_convexity_trivial_cases():
    a, b = mg.line_chain(4), mg.complete_chain(4)
    gm, lower, holds = mg.convexity_check(a, b, 1.0)
    assert gm == pytest.approx(mg.spectral_gap(a).gap, abs=1e-12) and holds
    gm, lower, holds = mg.convexity_check(a, a, 0.5)
    assert gm == pytest.approx(lower, abs=1e-12) and holds


def test_convexity_line_vs_complete_n5():
    gm, lower, holds = mg.convexity_check(mg.line_chain(5), mg.complete_chain(5), 0.5)
    assert holds and gm >= lower


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32), st.floats(0, 1))
def test_convexity_random_pairs(seed, p):
    rs = np.random.default_rng(seed)
    n = 4
    all_edges = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def random_chain():
        k = int(rs.integers(1, len(all_edges) + 1))
        pick = rs.choice(len(all_edges), k, replace=False)
        w = rs.uniform(0.1, 1, k)
        return mg.PauliChainMatrix(n, [all_edges[i] for i in pick], w / w.sum())

    _, _, holds = mg.convexity_check(random_chain(), random_chain(), p)
    assert holds


def test_gap_report_csv_round_trip():
    r = mg.spectral_gap(mg.line_chain(3))
    row = r.csv_row()
    assert row.count(",") == 4 and row.endswith("\n")
    back = GapReport.from_csv_row(row)
    assert (back.n, back.graph, back.gap, back.lambda2, back.solver_residual) == (
        r.n, r.graph, r.gap, r.lambda2, r.solver_residual)
    assert GapReport.csv_header() == "n,graph,gap,lambda2,solver_residual\n"


@given(st.integers(1, 8), st.text(alphabet="abcz_019(),.\"", min_size=1, max_size=12),
       st.floats(0, 1), st.floats(0, 1e-8))
def test_gap_report_csv_property(n, graph, gap, res):
    r = GapReport(n, graph, gap, 1 - gap, res)
    back = GapReport.from_csv_row(r.csv_row())
    assert (back.n, back.graph, back.gap, back.lambda2, back.solver_residual) == (n, graph, gap, 1 - gap, res)


# path decomposition ----------------------------------------------------------

def test_path_d1():
    assert mg.path_decomposition(1, 5) == [[0, 1, 2, 3, 4]]


@pytest.mark.parametrize("d,side", [(1, 2), (1, 6), (2, 2), (2, 4), (2, 5), (3, 3), (3, 4)])
def test_paths_cover(d, side):
    paths = mg.path_decomposition(d, side)
    assert len(paths) == d
    assert mg.covers_lattice(d, side, paths)
    lattice = {tuple(sorted(e)) for e in InteractionGraph.lattice(d, side).edges.tolist()}
    for p in paths:
        assert sorted(p) == list(range(side**d))
        assert mg.path_edges(p) <= lattice


def test_paths_2d_internal_edges_once():
    from scrambling.circuits import site_coords

    side = 4
    paths = mg.path_decomposition(2, side)
    uses = {}
    for p in paths:
        for e in mg.path_edges(p):
            uses[e] = uses.get(e, 0) + 1

    def on_boundary(e):
        a, b = (site_coords(v, 2, side) for v in e)
        return any(a[k] == b[k] and a[k] in (0, side - 1) for k in range(2))

    internal = [e for e in uses if not on_boundary(e)]
    assert internal and all(uses[e] == 1 for e in internal)


def test_path_errors():
    with pytest.raises(ValueError):
        mg.path_decomposition(4, 3)
    with pytest.raises(ValueError):
        mg.path_decomposition(2, 1)
