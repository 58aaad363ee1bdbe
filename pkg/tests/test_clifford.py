import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scrambling import clifford, dense

ids = st.integers(0, clifford.GROUP_ORDER - 1)


def _omega(u, v):
    return ((u & 1) * ((v >> 1) & 1) + ((u >> 1) & 1) * (v & 1)
            + ((u >> 2) & 1) * ((v >> 3) & 1) + ((u >> 3) & 1) * ((v >> 2) & 1)) & 1


def test_group_sizes():
    mats = clifford.symplectic_matrices()
    assert len(mats) == 720 == len(set(mats))
    assert clifford.GROUP_ORDER == 16 * 720
    for cols in mats:
        for a in range(4):
            for b in range(4):
                assert _omega(cols[a], cols[b]) == _omega(1 << a, 1 << b)


def test_tables_shape_and_readonly():
    image, flip = clifford.tables()
    assert image.shape == flip.shape == (11520, 16)
    assert not image.flags.writeable
    assert np.all(image[:, 0] == 0) and np.all(flip[:, 0] == 0)
    # each row permutes the 15 non-identity Paulis
    assert np.all(np.sort(image[:, 1:], axis=1) == np.arange(1, 16))


def test_identity_and_named():
    assert clifford.named("I") == 0
    image, flip = clifford.tables()
    assert np.array_equal(image[0], np.arange(16)) and not flip[0].any()
    c = clifford.named("CNOT")
    # XI -> XX, IX -> IX, ZI -> ZI, IZ -> ZZ in the packed encoding
    assert [clifford.conjugate_pair(c, v)[0] for v in (1, 4, 2, 8)] == [5, 4, 2, 10]


def test_tables_match_dense_unitaries():
    us = dense.clifford_unitaries()
    paulis = np.array([dense.pauli_matrix([v & 1, (v >> 2) & 1], [(v >> 1) & 1, (v >> 3) & 1]) for v in range(16)])
    image, flip = clifford.tables()
    udag = us.conj().transpose(0, 2, 1)
    for v in range(16):
        conj = us @ paulis[v] @ udag
        target = paulis[image[:, v]]
        sign = np.where(flip[:, v] == 1, -1.0, 1.0)[:, None, None]
        assert np.abs(conj - sign * target).max() < 1e-12


def test_named_gates_match_matrices():
    us = dense.clifford_unitaries()
    mats = {
        "H0": np.kron(dense.H, dense.I2),
        "S1": np.kron(dense.I2, dense.S),
        "CNOT": dense.CNOT,
        "CZ": np.diag([1, 1, 1, -1]).astype(complex),
        "SWAP": np.eye(4)[[0, 2, 1, 3]].astype(complex),
    }
    for name, m in mats.items():
        u = us[clifford.named(name)]
        overlap = np.trace(m.conj().T @ u) / 4
        assert abs(abs(overlap) - 1) < 1e-12, name


def test_uniform_pair_transition():
    image, _ = clifford.tables()
    for v in range(1, 16):
        counts = np.bincount(image[:, v], minlength=16)
        assert counts[0] == 0
        assert np.all(counts[1:] == 768)


@given(ids)
def test_decompose_round_trip(cid):
    cols, signs = clifford.decompose(cid)
    assert clifford.clifford_id(cols, signs) == cid


def test_bad_ids():
    with pytest.raises(ValueError):
        clifford.decompose(11520)
    with pytest.raises(ValueError):
        clifford.clifford_id((1, 1, 4, 8))
