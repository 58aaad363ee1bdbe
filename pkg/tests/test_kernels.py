"""Compiled and numpy backends agree with each other and with naive oracles."""
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scrambling import clifford, kernels, pauli, weight_chain as wc


def test_backend_selection():
    assert kernels.BACKEND in kernels.available_backends()
    assert "python" in kernels.available_backends()


def test_compiled_backend_present():
    assert kernels.compiled_backend is not None, "compiled extension failed to build"


def test_evolve_tridiagonal(backend):
    for n in (2, 5, 40):
        back, stay, fwd = wc.BirthDeathChain(n).rows()
        mass = np.random.default_rng(n).dirichlet(np.ones(n))
        want = mass @ np.linalg.matrix_power(wc.BirthDeathChain(n).dense(), 37)
        got = backend.evolve_tridiagonal(back, stay, fwd, mass, 37)
        assert np.abs(got - want).max() < 1e-14
        assert np.array_equal(backend.evolve_tridiagonal(back, stay, fwd, mass, 0), mass)


def _naive_support(state, qa, qb, outcome, ends):
    state = state.copy()
    sizes = [int(state.sum())]
    for g in range(len(qa)):
        a, b = qa[g], qb[g]
        if state[a] or state[b]:
            state[a] = pauli.OUTCOME_KEEPS_A[outcome[g]]
            state[b] = pauli.OUTCOME_KEEPS_B[outcome[g]]
        if g + 1 in ends:
            sizes.append(int(state.sum()))
    return state, sizes


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(0, 60), st.integers(0, 2**32))
def test_propagate_support(n, gates, seed):
    rs = np.random.default_rng(seed)
    qa = rs.integers(0, n, gates).astype(np.int32)
    qb = ((qa + rs.integers(1, n, gates)) % n).astype(np.int32)
    outcome = rs.integers(0, 15, gates).astype(np.uint8)
    ends = np.unique(np.concatenate([rs.integers(0, gates + 1, 4), [gates]])).astype(np.int64)
    ends = ends[ends > 0] if gates else np.array([0], dtype=np.int64)
    init = (rs.random(n) < 0.3).astype(np.uint8)
    want_state, want_sizes = _naive_support(init, qa, qb, outcome, set(ends.tolist()))
    for be in kernels.available_backends().values():
        st_ = init.copy()
        sizes = be.propagate_support(st_, qa, qb, outcome, ends, pauli.OUTCOME_KEEPS_A, pauli.OUTCOME_KEEPS_B)
        assert np.array_equal(st_, want_state)
        assert sizes.tolist()[: len(want_sizes)] == want_sizes[: len(sizes)]


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)).filter(lambda p: p[0] != p[1]), max_size=40))
def test_greedy_levels(pairs):
    qa = np.array([p[0] for p in pairs], dtype=np.int32)
    qb = np.array([p[1] for p in pairs], dtype=np.int32)
    want, cur, used = [], 0, set()
    for a, b in pairs:
        if a in used or b in used:
            cur += 1
            used = set()
        used |= {a, b}
        want.append(cur)
    for be in kernels.available_backends().values():
        assert be.greedy_levels(qa, qb, 10).tolist() == want


def test_apply_gates(backend):
    image, flip = clifford.tables()
    rs = np.random.default_rng(4)
    n, rows, g = 9, 13, 200
    xt = rs.integers(0, 2, (n, rows)).astype(np.uint8)
    zt = rs.integers(0, 2, (n, rows)).astype(np.uint8)
    r = rs.integers(0, 2, rows).astype(np.uint8)
    qa = rs.integers(0, n, g).astype(np.int32)
    qb = ((qa + rs.integers(1, n, g)) % n).astype(np.int32)
    cid = rs.integers(0, clifford.GROUP_ORDER, g).astype(np.int32)
    # scalar oracle, row by row
    wx, wz, wr = xt.copy(), zt.copy(), r.copy()
    for a, b, c in zip(qa, qb, cid):
        for row in range(rows):
            v = int(wx[a, row]) | int(wz[a, row]) << 1 | int(wx[b, row]) << 2 | int(wz[b, row]) << 3
            nv, f = clifford.conjugate_pair(int(c), v)
            wr[row] ^= f
            wx[a, row], wz[a, row], wx[b, row], wz[b, row] = nv & 1, nv >> 1 & 1, nv >> 2 & 1, nv >> 3 & 1
    backend.apply_gates(xt, zt, r, qa, qb, cid, image, flip)
    assert np.array_equal(xt, wx) and np.array_equal(zt, wz) and np.array_equal(r, wr)


def _rank_oracle(bits):
    m = bits.copy() % 2
    rank = 0
    for c in range(m.shape[1]):
        piv = np.flatnonzero(m[rank:, c])
        if piv.size == 0:
            continue
        p = rank + piv[0]
        m[[rank, p]] = m[[p, rank]]
        others = np.flatnonzero(m[:, c])
        others = others[others != rank]
        m[others] ^= m[rank]
        rank += 1
        if rank == m.shape[0]:
            break
    return rank


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(1, 150), st.floats(0.05, 0.9), st.integers(0, 2**32))
def test_gf2_rank(rows, cols, density, seed):
    from scrambling.stabilizer import _pack_rows

    bits = (np.random.default_rng(seed).random((rows, cols)) < density).astype(np.uint8)
    want = _rank_oracle(bits)
    for be in kernels.available_backends().values():
        assert be.gf2_rank(_pack_rows(bits)) == want


def test_weight_spectrum(backend):
    rs = np.random.default_rng(8)
    n, k = 7, 5
    gx = rs.integers(0, 2**n, k).astype(np.uint64)
    gz = rs.integers(0, 2**n, k).astype(np.uint64)
    for outside in (0, 0b1000001, 0b0010100):
        want = np.zeros(n + 1, dtype=np.int64)
        for sel in itertools.product((0, 1), repeat=k):
            x = z = 0
            for s, a, b in zip(sel, gx.tolist(), gz.tolist()):
                if s:
                    x ^= a
                    z ^= b
            if (x | z) & outside == 0:
                want[(x | z).bit_count()] += 1
        got = backend.weight_spectrum(gx, gz, n, np.uint64(outside))
        assert np.array_equal(np.asarray(got), want)


def test_weight_spectrum_large_k(backend):
    # more generators than one enumeration chunk; identity generators
    # only multiply the weight-0 class
    k = 20
    gx = np.zeros(k, dtype=np.uint64)
    gz = np.zeros(k, dtype=np.uint64)
    gz[0] = 1
    got = np.asarray(backend.weight_spectrum(gx, gz, 3, np.uint64(0)))
    assert got.tolist() == [2 ** (k - 1), 2 ** (k - 1), 0, 0]


@pytest.mark.parametrize("n", [2, 5, 37])
def test_matching_growth_backends_identical(n):
    bes = kernels.available_backends()
    seeds = np.arange(1, 9, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15)
    init = np.zeros(n, dtype=np.uint8)
    init[0] = 1
    outs = [be.matching_growth(n, 12, seeds, init, pauli.OUTCOME_KEEPS_A, pauli.OUTCOME_KEEPS_B) for be in bes.values()]
    for sizes, final in outs[1:]:
        assert np.array_equal(sizes, outs[0][0])
        assert np.array_equal(final, outs[0][1])
    sizes, final = outs[0]
    assert np.array_equal(sizes[:, -1], final.sum(axis=1))
    assert np.all(sizes >= 1)
