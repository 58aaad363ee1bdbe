"""Time each hot loop under the compiled and the pure-Python backend.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Inputs are built once and shared, so both backends see identical work.
Prints one row per kernel with the best-of-``repeat`` wall time and the
speedup of the compiled backend.
"""
import argparse
import math
import time

import numpy as np

from scrambling import circuits, clifford, kernels, stabilizer
from scrambling import weight_chain as wc
from scrambling.pauli import OUTCOME_KEEPS_A, OUTCOME_KEEPS_B


def _cases(quick):
    scale = 4 if quick else 1
    rs = np.random.default_rng(0)
    cases = {}

    n = 1024
    back, stay, fwd = wc.BirthDeathChain(n).rows()
    mass = wc.WeightDistribution.point(n, 1).mass
    steps = 20_000 // scale
    cases["evolve_tridiagonal"] = (f"n={n}, t={steps}", lambda k: k.evolve_tridiagonal(back, stay, fwd, mass, steps))

    n = 1024
    qa, qb = circuits.InteractionGraph.complete(n).sample_pairs(4 * n // scale, 1)
    cases["greedy_levels"] = (f"n={n}, gates={len(qa)}", lambda k: k.greedy_levels(qa, qb, n))

    depth = math.ceil(10 * math.log2(n)) // scale
    circ = circuits.sample_matching_circuit(n, depth, 2)
    ca, cb, _, ends = circ.arrays()
    outcome = rs.integers(0, 15, size=len(ca), dtype=np.uint8)

    def support(k):
        state = np.zeros(n, dtype=np.uint8)
        state[0] = 1
        return k.propagate_support(state, ca, cb, outcome, ends, OUTCOME_KEEPS_A, OUTCOME_KEEPS_B)

    cases["propagate_support"] = (f"n={n}, depth={depth}", support)

    n_tab = 256
    tcirc = circuits.sample_matching_circuit(n_tab, 20 // scale, 3)
    ta, tb, tc, _ = tcirc.arrays()
    image, flip = clifford.tables()
    tab0 = stabilizer.StabilizerTableau(n_tab)

    def tableau(k):
        tab = tab0.copy()
        k.apply_gates(tab.xt, tab.zt, tab.r, ta, tb, tc, image, flip)
        return tab

    cases["apply_gates"] = (f"n={n_tab}, gates={len(ta)}", tableau)

    rows = rs.integers(0, 2**63, size=(256, 4), dtype=np.int64).astype(np.uint64)
    cases["gf2_rank"] = ("256 x 256 bits", lambda k: k.gf2_rank(rows))

    n_ws = 20 - (2 if quick else 0)
    tab = stabilizer.StabilizerTableau(n_ws).apply_gates(
        circuits.sample_sequential_circuit(circuits.InteractionGraph.complete(n_ws), 200, 4))
    gx, gz = stabilizer._mask(tab.stab_x), stabilizer._mask(tab.stab_z)
    cases["weight_spectrum"] = (f"n={n_ws}, 2^{n_ws} elements", lambda k: k.weight_spectrum(gx, gz, n_ws, np.uint64(0)))

    n_mg = 1024
    trials = 200 // scale
    d_mg = math.ceil(10 * math.log2(n_mg))
    seeds = rs.integers(0, 2**63, size=trials, dtype=np.int64).astype(np.uint64)
    init = np.zeros(n_mg, dtype=np.uint8)
    init[0] = 1
    cases["matching_growth"] = (
        f"n={n_mg}, depth={d_mg}, trials={trials}",
        lambda k: k.matching_growth(n_mg, d_mg, seeds, init, OUTCOME_KEEPS_A, OUTCOME_KEEPS_B),
    )
    return cases


def best_time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the Python backend only")
    print(f"{'kernel':<20} {'workload':<30} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8}")
    for name, (label, fn) in _cases(args.quick).items():
        py = best_time(lambda: fn(backends["python"]), args.repeat)
        if "cython" in backends:
            cy = best_time(lambda: fn(backends["cython"]), args.repeat)
            print(f"{name:<20} {label:<30} {py:>11.4f} {cy:>11.4f} {py / cy:>7.1f}x")
        else:
            print(f"{name:<20} {label:<30} {py:>11.4f} {'-':>11} {'-':>8}")


if __name__ == "__main__":
    main()
