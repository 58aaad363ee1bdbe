"""Canonical enumeration of the two-qubit Clifford group (mod phases).

An element is a symplectic matrix ``S`` in Sp(4, 2) (720 of them) plus
four sign bits ``r`` for the images of the generators X_a, Z_a, X_b, Z_b,
giving 720 * 16 = 11520 elements. ``clifford_id = 16 * s_index + r``;
``s_index`` 0 is the identity matrix and the remaining 719 matrices are
ordered by their packed column encoding, so ``clifford_id`` 0 is the
identity gate.

A two-qubit Pauli is packed into four bits ``v = x_a | z_a<<1 | x_b<<2 |
z_b<<3``. For each gate we tabulate, for all 16 ``v``, the image ``S v``
and whether conjugation flips the sign of the Hermitian Pauli ``P(v)``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

GROUP_ORDER = 11520
N_SYMPLECTIC = 720
_IDENTITY_COLUMNS = (1, 2, 4, 8)


def _swap_xz(v: int) -> int:
    return ((v & 0b0101) << 1) | ((v & 0b1010) >> 1)


def symplectic_product(u: int, v: int) -> int:
    """1 if the two-qubit Paulis packed as ``u`` and ``v`` anticommute."""
    return (u & _swap_xz(v)).bit_count() & 1


def apply_columns(columns, v: int) -> int:
    out = 0
    for k in range(4):
        if (v >> k) & 1:
            out ^= columns[k]
    return out


def _enumerate_symplectic() -> list[tuple[int, int, int, int]]:
    cols = np.arange(16)
    c0, c1, c2, c3 = np.meshgrid(cols, cols, cols, cols, indexing="ij")
    c = [c0.ravel(), c1.ravel(), c2.ravel(), c3.ravel()]

    def omega(u, v):
        sw = ((v & 0b0101) << 1) | ((v & 0b1010) >> 1)
        return np.bitwise_count((u & sw).astype(np.uint8)) & 1

    target = {(0, 1): 1, (2, 3): 1}
    ok = np.ones(c0.size, dtype=bool)
    for i in range(4):
        for j in range(i + 1, 4):
            ok &= omega(c[i], c[j]) == target.get((i, j), 0)
    found = sorted(
        (tuple(int(col[k]) for col in c) for k in np.flatnonzero(ok)),
        key=lambda t: t[0] | t[1] << 4 | t[2] << 8 | t[3] << 12,
    )
    found.remove(_IDENTITY_COLUMNS)
    return [_IDENTITY_COLUMNS] + found


def _to_xz(v: int) -> tuple[int, int]:
    x = (v & 1) | ((v >> 2) & 1) << 1
    z = ((v >> 1) & 1) | ((v >> 3) & 1) << 1
    return x, z


def _mul(p, q):
    # (i^e1 X^x1 Z^z1)(i^e2 X^x2 Z^z2)
    e1, x1, z1 = p
    e2, x2, z2 = q
    return ((e1 + e2 + 2 * (z1 & x2).bit_count()) % 4, x1 ^ x2, z1 ^ z2)


def _hermitian(v: int):
    x, z = _to_xz(v)
    return ((x & z).bit_count() % 4, x, z)


def _base_flips(columns) -> list[int]:
    flips = []
    for v in range(16):
        x, z = _to_xz(v)
        acc = ((x & z).bit_count() % 4, 0, 0)
        for k in range(4):
            if (v >> k) & 1:
                acc = _mul(acc, _hermitian(columns[k]))
        e, ax, az = acc
        delta = (e - (ax & az).bit_count()) % 4
        if delta % 2:
            raise AssertionError("conjugated Pauli is not Hermitian")
        flips.append(delta // 2)
    return flips


@lru_cache(maxsize=None)
def tables() -> tuple[np.ndarray, np.ndarray]:
    """``(image, flip)`` arrays of shape (11520, 16), dtype uint8."""
    image = np.zeros((GROUP_ORDER, 16), dtype=np.uint8)
    flip = np.zeros((GROUP_ORDER, 16), dtype=np.uint8)
    parity = np.array(
        [[(r & v).bit_count() & 1 for v in range(16)] for r in range(16)], dtype=np.uint8
    )
    for s, columns in enumerate(symplectic_matrices()):
        img = np.array([apply_columns(columns, v) for v in range(16)], dtype=np.uint8)
        base = np.array(_base_flips(columns), dtype=np.uint8)
        image[16 * s : 16 * s + 16] = img
        flip[16 * s : 16 * s + 16] = base ^ parity
    image.flags.writeable = False
    flip.flags.writeable = False
    return image, flip


@lru_cache(maxsize=None)
def symplectic_matrices() -> tuple[tuple[int, int, int, int], ...]:
    mats = _enumerate_symplectic()
    if len(mats) != N_SYMPLECTIC:
        raise AssertionError(f"expected 720 symplectic matrices, found {len(mats)}")
    return tuple(mats)


@lru_cache(maxsize=None)
def _index_of_columns() -> dict:
    return {cols: i for i, cols in enumerate(symplectic_matrices())}


def clifford_id(columns, signs: int = 0) -> int:
    """Id of the gate with generator images ``columns`` and sign bits ``signs``."""
    try:
        s = _index_of_columns()[tuple(columns)]
    except KeyError:
        raise ValueError(f"{columns} is not symplectic") from None
    if not 0 <= signs < 16:
        raise ValueError("signs must be a 4-bit integer")
    return 16 * s + signs


def decompose(cid: int) -> tuple[tuple[int, int, int, int], int]:
    if not 0 <= cid < GROUP_ORDER:
        raise ValueError(f"clifford_id {cid} outside [0, {GROUP_ORDER})")
    return symplectic_matrices()[cid // 16], cid % 16


# Generator images, qubit a = first gate qubit.
NAMED_GATES = {
    "I": (1, 2, 4, 8),
    "H0": (2, 1, 4, 8),
    "H1": (1, 2, 8, 4),
    "S0": (3, 2, 4, 8),
    "S1": (1, 2, 12, 8),
    "CNOT": (5, 2, 4, 10),
    "CNOT10": (1, 10, 5, 8),
    "CZ": (9, 2, 6, 8),
    "SWAP": (4, 8, 1, 2),
}


def named(name: str) -> int:
    """Id of a standard gate, e.g. ``named("CNOT")`` (control = first qubit)."""
    return clifford_id(NAMED_GATES[name])


def conjugate_pair(cid: int, v: int) -> tuple[int, int]:
    """Image and sign flip of the packed Pauli ``v`` under gate ``cid``."""
    image, flip = tables()
    return int(image[cid, v]), int(flip[cid, v])
