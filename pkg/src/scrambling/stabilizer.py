"""Stabilizer tableaux for Clifford circuits built from two-qubit gates.

Rows ``0..n-1`` are destabilizers and rows ``n..2n-1`` stabilizers. Row
``k`` is the Hermitian Pauli ``(-1)^r[k] P(x[k], z[k])`` where ``(1, 1)``
on a qubit means ``Y``. Gates are applied through the per-``clifford_id``
image and sign tables of :mod:`scrambling.clifford`.
"""
from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import clifford, kernels
from .circuits import Gate, LayeredCircuit, LightconeViolation, lightcone_envelope
from .pauli import PauliString, weight
from .rng import as_random_source

MAX_SPECTRUM_QUBITS = 26
MAX_DISTANCE_QUBITS = 16


def _pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack rows of 0/1 bytes into little-endian uint64 words."""
    rows, cols = bits.shape
    words = max(1, -(-cols // 64))
    padded = np.zeros((rows, words * 64), dtype=np.uint8)
    padded[:, :cols] = bits
    return np.ascontiguousarray(np.packbits(padded, axis=1, bitorder="little").view("<u8").astype(np.uint64))


def _mask(bits: np.ndarray) -> np.ndarray:
    """Rows of 0/1 bytes (at most 64 columns) to integer masks."""
    return (bits.astype(np.uint64) << np.arange(bits.shape[1], dtype=np.uint64)).sum(axis=1, dtype=np.uint64)


class StabilizerTableau:
    """Pure stabilizer state on ``n`` qubits.

    Parameters
    ----------
    n : int
        Number of qubits.
    x, z : ndarray of uint8, shape (2n, n)
    r : ndarray of uint8, shape (2n,)
    """

    def __init__(self, n: int, x=None, z=None, r=None):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        if x is None:
            eye = np.eye(n, dtype=np.uint8)
            zero = np.zeros((n, n), dtype=np.uint8)
            x = np.vstack([eye, zero])
            z = np.vstack([zero, eye])
            r = np.zeros(2 * n, dtype=np.uint8)
        x = np.asarray(x, dtype=np.uint8)
        z = np.asarray(z, dtype=np.uint8)
        r = np.asarray(r, dtype=np.uint8)
        if x.shape != (2 * n, n) or z.shape != (2 * n, n) or r.shape != (2 * n,):
            raise ValueError("tableau arrays have the wrong shape")
        # stored qubit-major so a gate touches four contiguous rows
        self.xt = np.ascontiguousarray(x.T)
        self.zt = np.ascontiguousarray(z.T)
        self.r = r.copy()

    @property
    def x(self) -> np.ndarray:
        """``x[row, qubit]`` (a view)."""
        return self.xt.T

    @property
    def z(self) -> np.ndarray:
        return self.zt.T

    # construction -------------------------------------------------------

    @classmethod
    def all_zero(cls, n: int) -> "StabilizerTableau":
        return cls(n)

    @classmethod
    def bell_pairs(cls, n: int, m: int) -> "StabilizerTableau":
        """``m`` Bell pairs on qubits ``(2k, 2k + 1)``; the rest in ``|0>``."""
        if not 0 <= m <= n // 2:
            raise ValueError(f"cannot place {m} Bell pairs on {n} qubits")
        tab = cls(n)
        tab.entangle([(2 * k, 2 * k + 1) for k in range(m)])
        return tab

    @classmethod
    def decoupling(cls, setup: "DecouplingSetup") -> "StabilizerTableau":
        tab = cls(setup.n_total)
        tab.entangle(setup.bell_pairs())
        return tab

    def entangle(self, pairs) -> "StabilizerTableau":
        """Turn ``|00>`` on each pair into ``(|00> + |11>)/sqrt 2`` (H then CNOT)."""
        h, cx = clifford.named("H0"), clifford.named("CNOT")
        for a, b in pairs:
            self.apply_gates([Gate(a, b, h), Gate(a, b, cx)])
        return self

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(self.n, self.x.copy(), self.z.copy(), self.r.copy())

    # dynamics -----------------------------------------------------------

    def apply_gate(self, gate: Gate) -> "StabilizerTableau":
        return self.apply_gates([gate])

    def apply_gates(self, gates, offset: int = 0) -> "StabilizerTableau":
        """Conjugate every row by each gate in order; ``offset`` shifts qubit labels."""
        qa, qb, cid = _gate_arrays(gates)
        if qa.size == 0:
            return self
        qa += offset
        qb += offset
        if np.any(qa == qb) or min(qa.min(), qb.min()) < 0 or max(qa.max(), qb.max()) >= self.n:
            raise ValueError("gate qubits must be distinct and inside the register")
        if cid.min() < 0 or cid.max() >= clifford.GROUP_ORDER:
            raise ValueError("invalid clifford_id")
        image, flip = clifford.tables()
        kernels.apply_gates(self.xt, self.zt, self.r, qa, qb, cid, image, flip)
        return self

    # checks -------------------------------------------------------------

    def commutation_matrix(self) -> np.ndarray:
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        return (x @ z.T + z @ x.T) % 2

    def validate(self) -> None:
        n = self.n
        want = np.zeros((2 * n, 2 * n), dtype=np.int64)
        want[np.arange(n), np.arange(n) + n] = 1
        want[np.arange(n) + n, np.arange(n)] = 1
        if not np.array_equal(self.commutation_matrix(), want):
            raise AssertionError("rows do not form a symplectic basis")

    # stabilizer rows ----------------------------------------------------

    @property
    def stab_x(self) -> np.ndarray:
        return self.x[self.n :]

    @property
    def stab_z(self) -> np.ndarray:
        return self.z[self.n :]

    def stabilizers(self) -> list[tuple[int, PauliString]]:
        """``(sign bit, Pauli)`` for each stabilizer generator."""
        out = []
        for k in range(self.n, 2 * self.n):
            out.append((int(self.r[k]), PauliString(self.n, _row_int(self.x[k]), _row_int(self.z[k]))))
        return out

    def stabilizer_labels(self) -> list[str]:
        return [("-" if s else "+") + p.label for s, p in self.stabilizers()]

    # subsystem quantities ------------------------------------------------

    def subgroup_dimension(self, subset) -> int:
        """``k_S``: log2 of the number of stabilizer elements supported in ``subset``."""
        inside = np.zeros(self.n, dtype=bool)
        inside[list(subset)] = True
        cols = np.flatnonzero(~inside)
        if cols.size == 0:
            return self.n
        block = np.hstack([self.stab_x[:, cols], self.stab_z[:, cols]])
        return self.n - int(kernels.gf2_rank(_pack_rows(block)))

    def subsystem_purity(self, subset) -> float:
        subset = _as_subset(subset, self.n)
        return 2.0 ** (self.subgroup_dimension(subset) - len(subset))

    def trace_distance_to_mixed(self, subset) -> float:
        """``|| rho_S - I / 2^|S| ||_1 = 2 (1 - 2^(-k_S))``."""
        subset = _as_subset(subset, self.n)
        return 2.0 * (1.0 - 2.0 ** -self.subgroup_dimension(subset))

    def weight_mass_spectrum(self, restrict=None) -> np.ndarray:
        """Number of stabilizer-group elements of each weight ``0..n``,
        optionally counting only elements supported in ``restrict``."""
        if self.n > MAX_SPECTRUM_QUBITS:
            raise ValueError(f"weight spectrum enumerates 2^n elements; n <= {MAX_SPECTRUM_QUBITS}")
        outside = 0
        if restrict is not None:
            keep = _as_subset(restrict, self.n)
            outside = sum(1 << q for q in range(self.n) if q not in keep)
        return kernels.weight_spectrum(_mask(self.stab_x), _mask(self.stab_z), self.n, np.uint64(outside))

    # dump format ----------------------------------------------------------

    def dumps(self) -> str:
        out = io.StringIO()
        self.dump(out)
        return out.getvalue()

    def dump(self, fh) -> None:
        """Header ``n=<n>``, then per row ``<xbits> <zbits> <sign>``."""
        fh.write(f"n={self.n}\n")
        for k in range(2 * self.n):
            xb = "".join("01"[b] for b in self.x[k])
            zb = "".join("01"[b] for b in self.z[k])
            fh.write(f"{xb} {zb} {int(self.r[k])}\n")

    @classmethod
    def loads(cls, text: str) -> "StabilizerTableau":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty tableau dump")
        head = lines[0].strip()
        if not head.startswith("n="):
            raise ValueError("tableau dump must start with n=<n>")
        n = int(head[2:])
        if len(lines) != 2 * n + 1:
            raise ValueError(f"expected {2 * n} rows, found {len(lines) - 1}")
        x = np.zeros((2 * n, n), dtype=np.uint8)
        z = np.zeros((2 * n, n), dtype=np.uint8)
        r = np.zeros(2 * n, dtype=np.uint8)
        for k, line in enumerate(lines[1:]):
            xb, zb, sign = line.split()
            if len(xb) != n or len(zb) != n or sign not in ("0", "1"):
                raise ValueError(f"malformed row {k}: {line!r}")
            x[k] = np.frombuffer(xb.encode(), dtype=np.uint8) - ord("0")
            z[k] = np.frombuffer(zb.encode(), dtype=np.uint8) - ord("0")
            r[k] = int(sign)
        return cls(n, x, z, r)

    @classmethod
    def load(cls, fh) -> "StabilizerTableau":
        return cls.loads(fh.read())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StabilizerTableau)
            and self.n == other.n
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r, other.r)
        )


def _gate_arrays(gates):
    if isinstance(gates, LayeredCircuit):
        return gates.arrays()[:3]
    arr = np.array(list(gates), dtype=np.int64).reshape(-1, 3)
    return tuple(np.ascontiguousarray(arr[:, k], dtype=np.int32) for k in range(3))


def _row_int(bits) -> int:
    return sum(1 << q for q, b in enumerate(bits) if b)


def _as_subset(subset, n: int) -> list[int]:
    out = sorted({int(q) for q in subset})
    if out and (out[0] < 0 or out[-1] >= n):
        raise ValueError(f"subset outside range({n})")
    return out


def evolve_pauli(pauli: PauliString, gates, sign: int = 0) -> tuple[int, PauliString]:
    """Conjugate a Pauli by each gate in order; returns ``(sign bit, image)``."""
    n = pauli.n
    tab = StabilizerTableau.__new__(StabilizerTableau)
    tab.n = n
    tab.xt = np.array([[(pauli.x >> q) & 1] for q in range(n)], dtype=np.uint8)
    tab.zt = np.array([[(pauli.z >> q) & 1] for q in range(n)], dtype=np.uint8)
    tab.r = np.array([sign], dtype=np.uint8)
    tab.apply_gates(gates)
    return int(tab.r[0]), PauliString(n, _row_int(tab.xt[:, 0]), _row_int(tab.zt[:, 0]))


def pauli_weight_trajectory(circuit: LayeredCircuit, start_qubit: int, letter: str = "Z") -> np.ndarray:
    """Weight of a single-qubit Pauli after each level of ``circuit``."""
    n = circuit.n
    code = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}[letter]
    xt = np.zeros((n, 1), dtype=np.uint8)
    zt = np.zeros((n, 1), dtype=np.uint8)
    xt[start_qubit, 0], zt[start_qubit, 0] = code
    r = np.zeros(1, dtype=np.uint8)
    qa, qb, cid, ends = circuit.arrays()
    image, flip = clifford.tables()
    sizes = np.empty(circuit.depth + 1, dtype=np.int64)
    sizes[0] = 1
    lo = 0
    for t, hi in enumerate(ends.tolist(), start=1):
        kernels.apply_gates(xt, zt, r, qa[lo:hi], qb[lo:hi], cid[lo:hi], image, flip)
        sizes[t] = int(np.count_nonzero(xt | zt))
        lo = hi
    return sizes


def check_weight_lightcone(circuit: LayeredCircuit, start_qubit: int, d: int | None = None) -> np.ndarray:
    sizes = pauli_weight_trajectory(circuit, start_qubit)
    env = lightcone_envelope(circuit.depth, circuit.n, d)
    bad = np.flatnonzero(sizes > env)
    if bad.size:
        raise LightconeViolation(f"Pauli weight {sizes[bad[0]]} > envelope {env[bad[0]]} at level {bad[0]}")
    return sizes


# code distance ----------------------------------------------------------


def _span_keys(gx: np.ndarray, gz: np.ndarray, n: int) -> np.ndarray:
    keys = np.zeros(1, dtype=np.uint64)
    for a, b in zip(gx.tolist(), gz.tolist()):
        g = np.uint64(a | (b << n))
        keys = np.concatenate([keys, keys ^ g])
    return np.unique(keys)


def _paulis_of_weight(n: int, w: int):
    """``(x, z)`` masks of all weight-``w`` Pauli strings, yielded per support."""
    # digits 1=X, 2=Y, 3=Z
    letters = np.array(list(itertools.product((1, 2, 3), repeat=w)), dtype=np.uint64).reshape(-1, w)
    lx = (letters <= 2).astype(np.uint64)
    lz = (letters >= 2).astype(np.uint64)
    for support in itertools.combinations(range(n), w):
        shifts = np.array(support, dtype=np.uint64)
        yield (lx << shifts).sum(axis=1, dtype=np.uint64), (lz << shifts).sum(axis=1, dtype=np.uint64)


def code_distance_from_stabilizers(n: int, stabilizers, max_candidates: int = 50_000_000) -> int:
    """Minimum weight of a Pauli commuting with every generator but not in
    the group they generate. ``stabilizers`` holds ``PauliString``s or labels."""
    if n > MAX_DISTANCE_QUBITS:
        raise ValueError(f"exact distance search is limited to n <= {MAX_DISTANCE_QUBITS}")
    gens = [PauliString.from_label(s) if isinstance(s, str) else s for s in stabilizers]
    if any(g.n != n for g in gens):
        raise ValueError("stabilizer length does not match n")
    gx = np.array([g.x for g in gens], dtype=np.uint64)
    gz = np.array([g.z for g in gens], dtype=np.uint64)
    group = _span_keys(gx, gz, n)
    examined = 0
    for w in range(1, n + 1):
        for cx, cz in _paulis_of_weight(n, w):
            examined += len(cx)
            if examined > max_candidates:
                raise RuntimeError("distance search space exceeded")
            ok = np.ones(len(cx), dtype=bool)
            for a, b in zip(gx, gz):
                ok &= (np.bitwise_count((cx & b) ^ (cz & a)) & 1) == 0
            if not ok.any():
                continue
            keys = cx[ok] | (cz[ok] << np.uint64(n))
            if not np.isin(keys, group).all():
                return w
    raise RuntimeError("no logical operator found (the code has no logical qubits)")


def code_distance(tableau: StabilizerTableau, m: int, **kwargs) -> int:
    """Distance of the code whose stabilizers are the images of ``Z`` on
    qubits ``m..n-1`` (the last ``n - m`` stabilizer rows); qubits ``0..m-1``
    carry the logical information."""
    if not 1 <= m < tableau.n:
        raise ValueError("need 1 <= m < n")
    stabs = [p for _, p in tableau.stabilizers()[m:]]
    return code_distance_from_stabilizers(tableau.n, stabs, **kwargs)


# decoupling -------------------------------------------------------------

PURE_ANCILLA = "pure_ancilla"
ENTANGLED_ANCILLA = "entangled_ancilla"


@dataclass(frozen=True)
class DecouplingSetup:
    """Register layout ``M | M' A' | A``.

    ``n`` is the number of circuit qubits ``B = M' A'``. ``M`` (the
    reference, ``m`` qubits) holds halves of Bell pairs with ``M'``. With
    ``entangled_ancilla`` each qubit of ``A'`` also shares a Bell pair with
    a qubit of ``A``; with ``pure_ancilla`` ``A'`` starts in ``|0...0>``
    and ``A`` is absent.
    """

    n: int
    m: int
    mode: str = PURE_ANCILLA

    def __post_init__(self):
        if self.mode not in (PURE_ANCILLA, ENTANGLED_ANCILLA):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 1 <= self.m <= self.n:
            raise ValueError("need 1 <= m <= n")

    @property
    def n_total(self) -> int:
        return self.m + self.n + (self.n - self.m if self.mode == ENTANGLED_ANCILLA else 0)

    @property
    def M(self) -> range:
        return range(0, self.m)

    @property
    def B(self) -> range:
        return range(self.m, self.m + self.n)

    @property
    def M_prime(self) -> range:
        return range(self.m, 2 * self.m)

    @property
    def A_prime(self) -> range:
        return range(2 * self.m, self.m + self.n)

    @property
    def A(self) -> range:
        return range(self.m + self.n, self.n_total)

    def bell_pairs(self) -> list[tuple[int, int]]:
        pairs = list(zip(self.M, self.M_prime))
        if self.mode == ENTANGLED_ANCILLA:
            pairs += list(zip(self.A_prime, self.A))
        return pairs

    def initial_tableau(self) -> StabilizerTableau:
        return StabilizerTableau.decoupling(self)


def decoupling_distance(setup: DecouplingSetup, gates, subset) -> float:
    """Trace distance of ``rho_{M S}`` from maximally mixed; ``gates`` and
    ``subset`` use circuit labels ``0..n-1`` for the qubits of ``B``."""
    tab = setup.initial_tableau().apply_gates(gates, offset=setup.m)
    return tab.trace_distance_to_mixed(list(setup.M) + [setup.m + q for q in subset])


def decoupling_experiment(
    setup: DecouplingSetup,
    circuit: LayeredCircuit | Iterable | Callable,
    subset_size: int,
    trials: int,
    randomness,
) -> dict:
    """Trace distance of ``rho_{M S}`` over ``trials`` draws of a uniform
    ``subset_size`` subset ``S`` of ``B``.

    ``circuit`` is either a fixed gate sequence on ``B`` or a callable
    ``randomness -> circuit`` sampled afresh per trial.
    """
    if not 0 <= subset_size <= setup.n:
        raise ValueError(f"subset_size {subset_size} outside 0..{setup.n}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rs = as_random_source(randomness)
    values = np.empty(trials)
    for k in range(trials):
        child = rs.child(k)
        gates = circuit(child.child(0)) if callable(circuit) else circuit
        subset = child.child(1).gen.choice(setup.n, size=subset_size, replace=False)
        values[k] = decoupling_distance(setup, gates, subset)
    return {
        "mean": float(values.mean()),
        "q50": float(np.quantile(values, 0.5)),
        "q90": float(np.quantile(values, 0.9)),
        "max": float(values.max()),
        "values": values,
    }


def purity_excess(tab: StabilizerTableau, subset) -> float:
    """``2^|S| tr(rho_S^2) - 1``."""
    subset = _as_subset(subset, tab.n)
    return 2.0 ** tab.subgroup_dimension(subset) - 1.0


def five_qubit_code() -> list[str]:
    return ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]


def binomial_mass(n: int) -> np.ndarray:
    return np.array([math.comb(n, k) for k in range(n + 1)], dtype=np.int64)
