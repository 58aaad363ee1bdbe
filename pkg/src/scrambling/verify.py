"""Self-check suites used by ``scrambling verify``.

``fast`` runs small exact oracles; ``full`` adds seeded Monte Carlo checks.
Each check receives a :class:`Context` whose ``transition`` callable can be
swapped for a corrupted one to confirm that the suite notices.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from . import circuits, clifford, hitting, moment_gap, pauli, stabilizer, subset_chain
from . import weight_chain as wc


@dataclass
class Context:
    transition: Callable = wc.transition_row_exact
    seed: int = 20240611


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""
    seconds: float = 0.0


def mutated_transition(n: int, x: int):
    """Negative control: forward rate inflated by 1%, stay adjusted to keep rows stochastic."""
    back, stay, fwd = wc.transition_row_exact(n, x)
    fwd2 = fwd * Fraction(101, 100)
    return back, stay - (fwd2 - fwd), fwd2


def _rows(ctx: Context, n: int):
    back, stay, fwd = (np.array(v, dtype=np.float64) for v in zip(*(ctx.transition(n, x) for x in range(1, n + 1))))
    return back, stay, fwd


def check_row_stochastic(ctx):
    worst = 0.0
    for n in (2, 4, 16, 256, 4096):
        back, stay, fwd = _rows(ctx, n)
        if np.any(np.stack([back, stay, fwd]) < 0):
            return False, f"negative entry at n={n}"
        total = back + stay + fwd
        total[-1] -= fwd[-1]
        total[0] -= back[0]
        worst = max(worst, float(np.abs(total - 1).max()))
    return worst <= 1e-12, f"max |row sum - 1| = {worst:.2e}"


def check_stationarity(ctx):
    worst = 0.0
    for n in (2, 4, 16, 256, 4096):
        back, stay, fwd = _rows(ctx, n)
        pi = wc.stationary(n).mass
        nxt = pi * stay
        nxt[1:] += pi[:-1] * fwd[:-1]
        nxt[:-1] += pi[1:] * back[1:]
        worst = max(worst, math.fsum(np.abs(nxt - pi)))
    return worst <= 1e-10, f"max ||pi P - pi||_1 = {worst:.2e}"


def check_reversibility(ctx):
    for n in (2, 3, 8, 17, 32):
        pi = wc.stationary_exact(n)
        rows = [ctx.transition(n, x) for x in range(1, n + 1)]
        for x in range(n - 1):
            if pi[x] * rows[x][2] != pi[x + 1] * rows[x + 1][0]:
                return False, f"detailed balance fails at n={n}, x={x + 1}"
    return True, "exact for n in {2, 3, 8, 17, 32}"


def check_lumping(ctx):
    for n in range(2, 6):
        rows = moment_gap.lumped_rows(moment_gap.complete_chain(n))
        if rows is None:
            return False, f"weight classes not lumpable at n={n}"
        for x, row in enumerate(rows, start=1):
            back, stay, fwd = ctx.transition(n, x)
            want = [Fraction(0)] * (n + 1)
            want[x - 1] += back
            want[x] += stay
            if x < n:
                want[x + 1] += fwd
            if row != want:
                return False, f"lumped row differs at n={n}, x={x}"
    return True, "complete graph n = 2..5"


def check_clifford_uniform(ctx):
    image, _ = clifford.tables()
    counts = np.stack([np.bincount(image[:, v], minlength=16) for v in range(1, 16)])
    ok = np.all(counts[:, 0] == 0) and np.all(counts[:, 1:] == 768)
    return bool(ok), "each non-identity pair maps to each non-identity pair 768 times"


def check_outcome_marginals(ctx):
    both = int(np.sum(pauli.OUTCOME_KEEPS_A & pauli.OUTCOME_KEEPS_B))
    only_a = int(np.sum(pauli.OUTCOME_KEEPS_A & ~pauli.OUTCOME_KEEPS_B & 1))
    only_b = int(np.sum(~pauli.OUTCOME_KEEPS_A & pauli.OUTCOME_KEEPS_B & 1))
    return (both, only_a, only_b) == (9, 3, 3), f"(both, a, b) = ({both}, {only_a}, {only_b}) / 15"


def check_hitting_closed_forms(ctx):
    worst = 0.0
    for a in (1, 2, 5, 20, 60):
        for am, ap in ((1.0, 1.0), (3.0, 3.0), (0.5, 2.0), (2.0, 0.7)):
            g = hitting.hitting_probability(hitting.WalkSpec.from_alphas(a, am, ap))
            u = hitting.hitting_probability_uniform(am, ap, a)
            worst = max(worst, abs(g - u))
        worst = max(worst, abs(hitting.hitting_probability(hitting.WalkSpec.uniform(a, 0.5)) - a / (a + 1)))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def check_parallelize(ctx):
    c = circuits.parallelize([(1, 2), (3, 4), (1, 3)])
    ok = [[(g.i, g.j) for g in lev] for lev in c.levels] == [[(1, 2), (3, 4)], [(1, 3)]]
    ok &= circuits.parallelize([(1, 2), (1, 3), (1, 4)]).depth == 3
    ok &= circuits.parallelize([]).depth == 0
    return bool(ok), "greedy leveling examples"


def check_tableau_dense(ctx):
    from . import dense

    rs = np.random.default_rng(ctx.seed)
    for trial in range(10):
        n = int(rs.integers(2, 5))
        gates = circuits.sample_sequential_circuit(circuits.InteractionGraph.complete(n), 12, ctx.seed + trial)
        tab = stabilizer.StabilizerTableau(n).apply_gates(gates)
        psi = dense.run_circuit(n, gates)
        if not np.allclose(dense.stabilizer_expectations(psi, tab), 1, atol=1e-12):
            return False, "stabilizer signs disagree with the state vector"
        if not np.allclose(tab.weight_mass_spectrum(), dense.weight_mass(psi, n), atol=1e-12):
            return False, "weight mass disagrees"
        sub = [0] if n < 3 else [0, 2]
        rho = dense.reduced_density(psi, sub, n)
        if abs(tab.subsystem_purity(sub) - dense.purity(rho)) > 1e-12:
            return False, "purity disagrees"
        if abs(tab.trace_distance_to_mixed(sub) - dense.trace_distance_to_mixed(rho)) > 1e-12:
            return False, "trace distance disagrees"
    return True, "10 random circuits, n = 2..4"


def check_subset_exact(ctx):
    v = subset_chain.exact_survival(4, 0.25, 1)
    law2 = subset_chain.exact_size_distribution(2, 1)
    ok = abs(v - 6 / 15) < 1e-15 and np.allclose(law2, [0, 6 / 15, 9 / 15])
    return bool(ok), f"n=4 survival {v:.15f}"


def check_gap_small(ctx):
    r = moment_gap.spectral_gap(moment_gap.complete_chain(2))
    return abs(r.gap - 1) < 1e-12, f"n=2 gap {r.gap:.15f}"


def check_code_distance(ctx):
    d = stabilizer.code_distance_from_stabilizers(5, stabilizer.five_qubit_code())
    return d == 3, f"five-qubit code distance {d}"


def check_paths(ctx):
    ok = all(moment_gap.covers_lattice(d, s, moment_gap.path_decomposition(d, s)) for d, s in ((1, 5), (2, 4), (3, 3)))
    return ok, "snake paths cover the lattice"


def check_mc_hitting(ctx):
    spec = hitting.WalkSpec.uniform(20, 0.75)
    p = hitting.hitting_probability(spec)
    est = hitting.hitting_probability_mc(spec, 200_000, ctx.seed)
    sigma = math.sqrt(p * (1 - p) / 200_000)
    return abs(est - p) <= 3 * sigma, f"MC {est:.5f} vs exact {p:.5f} (3 sigma = {3 * sigma:.5f})"


def check_mc_subset_law(ctx):
    n, depth, trials = 8, 3, 100_000
    sizes, _ = subset_chain.growth_batch(n, depth, trials, ctx.seed)
    exact = subset_chain.exact_size_distribution(n, depth)
    obs = np.bincount(sizes[:, -1], minlength=n + 1)
    keep = exact * trials > 5
    expected = exact[keep] * trials
    chi2 = float((((obs[keep] - expected) ** 2) / expected).sum())
    p = float(stats.chi2.sf(chi2, keep.sum() - 1))
    return p > 1e-3, f"chi2 p-value {p:.3g}"


def check_mc_gate_transition(ctx):
    image, _ = clifford.tables()
    rs = np.random.default_rng(ctx.seed)
    cid = rs.integers(0, clifford.GROUP_ORDER, size=100_000)
    obs = np.bincount(image[cid, 6], minlength=16)[1:]
    p = float(stats.chisquare(obs).pvalue)
    return p > 1e-3, f"chi2 p-value {p:.3g}"


def check_mc_matchings(ctx):
    flat = circuits.matching_pairs(4, 100_000, ctx.seed).reshape(-1, 4)
    pos = np.argmax(flat == 0, axis=1)
    key = flat[np.arange(len(flat)), pos ^ 1] - 1  # partner of qubit 0 names the matching
    counts = np.bincount(key, minlength=3)
    p = float(stats.chisquare(counts).pvalue)
    return p > 1e-3, f"matching counts {counts.tolist()}, p = {p:.3g}"


FAST = [
    ("row_stochastic", check_row_stochastic),
    ("stationarity", check_stationarity),
    ("reversibility", check_reversibility),
    ("lumping", check_lumping),
    ("clifford_uniform", check_clifford_uniform),
    ("outcome_marginals", check_outcome_marginals),
    ("hitting_closed_forms", check_hitting_closed_forms),
    ("parallelize", check_parallelize),
    ("tableau_dense", check_tableau_dense),
    ("subset_exact", check_subset_exact),
    ("gap_small", check_gap_small),
    ("code_distance", check_code_distance),
    ("paths", check_paths),
]

FULL = FAST + [
    ("mc_hitting", check_mc_hitting),
    ("mc_subset_law", check_mc_subset_law),
    ("mc_gate_transition", check_mc_gate_transition),
    ("mc_matchings", check_mc_matchings),
]


def run(suite: str = "fast", ctx: Context | None = None) -> list[CheckResult]:
    ctx = ctx or Context()
    checks = {"fast": FAST, "full": FULL}[suite]
    out = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(ctx)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
