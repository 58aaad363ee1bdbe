"""Dense state-vector reference for small registers.

Builds every two-qubit Clifford as a 4x4 unitary by closing ``{H, S, CNOT}``
under multiplication (modulo global phase) and labels each by the
``clifford_id`` its Pauli conjugation action selects. Used to cross-check
the tableau code and the Clifford tables at ``n <= 6``. Passing
``dtype=np.clongdouble`` runs the reference in extended precision, which
keeps rounding below 1e-12 over long circuits.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from . import clifford

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j])
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

_SINGLE = {(0, 0): I2, (1, 0): X, (1, 1): Y, (0, 1): Z}


def pauli_matrix(xbits, zbits, dtype=complex) -> np.ndarray:
    """Kronecker product over qubits; qubit 0 is the leftmost factor."""
    out = np.eye(1, dtype=dtype)
    for xb, zb in zip(xbits, zbits):
        out = np.kron(out, _SINGLE[(int(xb), int(zb))].astype(dtype))
    return out


def _packed_pauli(v: int, dtype=complex) -> np.ndarray:
    return pauli_matrix([v & 1, (v >> 2) & 1], [(v >> 1) & 1, (v >> 3) & 1], dtype)


def _phase_key(u: np.ndarray) -> bytes:
    flat = u.ravel()
    k = np.flatnonzero(np.abs(flat) > 1e-9)[0]
    v = np.asarray(u * (abs(flat[k]) / flat[k]), dtype=complex)
    # adding 0j folds -0.0 into 0.0 in both parts
    return (np.round(v, 8) + 0j).tobytes()


def conjugation_actions(us: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Generator images (shape ``(k, 4)``) and sign bits of ``P -> U P U^dagger``."""
    paulis = np.array([_packed_pauli(v, us.dtype) for v in range(16)])
    rows = np.arange(len(us))
    cols = np.zeros((len(us), 4), dtype=np.int64)
    signs = np.zeros(len(us), dtype=np.int64)
    for k, v in enumerate((1, 2, 4, 8)):
        img = us @ paulis[v] @ us.conj().transpose(0, 2, 1)
        # tr(P_w img) / 4 is +-1 on the image and 0 elsewhere
        overlap = np.einsum("wij,uji->uw", paulis, img).real / 4
        w = np.argmax(np.abs(overlap), axis=1)
        if not np.allclose(np.abs(overlap[rows, w]), 1):
            raise AssertionError("conjugate is not a Pauli")
        cols[:, k] = w
        signs |= (overlap[rows, w] < 0).astype(np.int64) << k
    return cols, signs


def clifford_unitaries(dtype=complex) -> np.ndarray:
    """``(11520, 4, 4)`` array; entry ``c`` realizes ``clifford_id`` ``c``."""
    return _clifford_unitaries(np.dtype(dtype).name)


@lru_cache(maxsize=None)
def _clifford_unitaries(dtype: str) -> np.ndarray:
    h = np.array([[1, 1], [1, -1]], dtype=dtype) / np.sqrt(np.array(2, dtype=dtype).real)
    i2 = I2.astype(dtype)
    s = S.astype(dtype)
    gens = [np.kron(h, i2), np.kron(i2, h), np.kron(s, i2), np.kron(i2, s), CNOT.astype(dtype)]
    eye = np.eye(4, dtype=dtype)
    seen = {_phase_key(eye): eye}
    frontier = [eye]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                w = g @ u
                key = _phase_key(w)
                if key not in seen:
                    seen[key] = w
                    nxt.append(w)
        frontier = nxt
        if len(seen) > clifford.GROUP_ORDER:
            raise AssertionError("closure exceeded the group order")
    if len(seen) != clifford.GROUP_ORDER:
        raise AssertionError(f"closure has {len(seen)} elements")
    us = np.array(list(seen.values()))
    cols, signs = conjugation_actions(us)
    out = np.zeros((clifford.GROUP_ORDER, 4, 4), dtype=dtype)
    filled = np.zeros(clifford.GROUP_ORDER, dtype=bool)
    for u, c, r in zip(us, cols.tolist(), signs.tolist()):
        cid = clifford.clifford_id(tuple(c), r)
        out[cid] = u
        filled[cid] = True
    if not filled.all():
        raise AssertionError("some clifford_id has no unitary")
    out.flags.writeable = False
    return out


def zero_state(n: int, dtype=complex) -> np.ndarray:
    psi = np.zeros(2**n, dtype=dtype)
    psi[0] = 1.0
    return psi


def apply_two_qubit(psi: np.ndarray, u: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    t = psi.reshape((2,) * n)
    t = np.moveaxis(t, (a, b), (0, 1)).reshape(4, -1)
    t = (u @ t).reshape((2, 2) + (2,) * (n - 2))
    return np.moveaxis(t, (0, 1), (a, b)).reshape(-1)


def run_circuit(n: int, gates, psi: np.ndarray | None = None, dtype=None) -> np.ndarray:
    if dtype is None:
        dtype = complex if psi is None else psi.dtype
    us = clifford_unitaries(dtype)
    psi = zero_state(n, dtype) if psi is None else psi.astype(dtype)
    for a, b, c in gates:
        psi = apply_two_qubit(psi, us[c], a, b, n)
    return psi


def reduced_density(psi: np.ndarray, subset, n: int) -> np.ndarray:
    keep = sorted(subset)
    rest = [q for q in range(n) if q not in keep]
    t = np.moveaxis(psi.reshape((2,) * n), keep + rest, list(range(n)))
    m = t.reshape(2 ** len(keep), -1)
    return m @ m.conj().T


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def trace_distance_to_mixed(rho: np.ndarray) -> float:
    d = rho.shape[0]
    # eigvalsh has no extended-precision path; the shift is taken before rounding down
    return float(np.abs(np.linalg.eigvalsh((rho - np.eye(d, dtype=rho.dtype) / d).astype(complex))).sum())


def weight_mass(psi: np.ndarray, n: int, restrict=None) -> np.ndarray:
    """``mass[l] = sum over weight-l Paulis (inside restrict) of <psi|P|psi>^2``."""
    keep = set(range(n)) if restrict is None else set(restrict)
    mass = np.zeros(n + 1, dtype=psi.real.dtype)
    for bits in itertools.product(range(4), repeat=n):
        if any(b and q not in keep for q, b in enumerate(bits)):
            continue
        xb = [b & 1 for b in bits]
        zb = [b >> 1 for b in bits]
        ev = np.vdot(psi, pauli_matrix(xb, zb, psi.dtype) @ psi).real
        mass[sum(1 for b in bits if b)] += ev**2
    return mass.astype(np.float64)


def stabilizer_expectations(psi: np.ndarray, tableau) -> np.ndarray:
    """``<psi| (-1)^r P |psi>`` for each stabilizer row (all 1 when consistent)."""
    n = tableau.n
    out = []
    for k in range(n, 2 * n):
        p = pauli_matrix(tableau.x[k], tableau.z[k])
        out.append((-1) ** int(tableau.r[k]) * np.vdot(psi, p @ psi).real)
    return np.array(out)
