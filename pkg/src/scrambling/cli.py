"""Command-line experiment harness.

Every subcommand takes ``--seed``, ``--out``, ``--format`` and ``--config``.
A config file holds ``key = value`` lines using the flag names (dashes or
underscores); flags given on the command line override it. Trial ``i``
draws from ``RandomSource(seed).child(i)``, so data rows do not depend on
``--workers``. Output is written to ``<out>.partial`` and renamed when the
run finishes; a failed run leaves the ``.partial`` file with an
``incomplete`` marker. Relative ``--out`` paths resolve against
``$SCRAMBLING_OUTPUT_DIR`` when it is set.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata

import numpy as np

from . import circuits, hitting, kernels, moment_gap, stabilizer, subset_chain, verify
from . import weight_chain as wc
from .rng import RandomSource

OUTPUT_DIR_ENV = "SCRAMBLING_OUTPUT_DIR"
HARNESS_KEYS = {"out", "format", "config", "workers", "command", "func", "dump_config"}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# ---------------------------------------------------------------- config


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def config_items(args: argparse.Namespace) -> list[tuple[str, str]]:
    items = []
    for key, value in sorted(vars(args).items()):
        if key in HARNESS_KEYS or value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        items.append((key, str(value)))
    return [("command", args.command)] + items


def config_text(args: argparse.Namespace) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_items(args))


def config_hash(args: argparse.Namespace) -> str:
    return hashlib.sha256(config_text(args).encode()).hexdigest()[:16]


# ---------------------------------------------------------------- output


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


class RecordWriter:
    """Single owner of the output stream; flushes after every record."""

    def __init__(self, out: str | None, fmt: str, fields: list[str]):
        self.fmt = fmt
        self.fields = ["record", "experiment", "config_hash", "seed", "trial"] + fields + ["wall_time", "version"]
        self.final_path = None
        if out is None:
            self.fh = sys.stdout
        else:
            base = os.environ.get(OUTPUT_DIR_ENV)
            if base and not os.path.isabs(out):
                os.makedirs(base, exist_ok=True)
                out = os.path.join(base, out)
            self.final_path = out
            self.fh = open(out + ".partial", "w", newline="")
        self.writer = csv.writer(self.fh, lineterminator="\n") if fmt == "csv" else None
        if self.writer:
            self.writer.writerow(self.fields)
            self.fh.flush()

    def write(self, record: dict) -> None:
        if self.fmt == "csv":
            self.writer.writerow([_fmt(record.get(k)) for k in self.fields])
        else:
            clean = {k: (float(v) if isinstance(v, np.floating) else int(v) if isinstance(v, np.integer) else v)
                     for k, v in record.items() if v is not None}
            self.fh.write(json.dumps(clean) + "\n")
        self.fh.flush()

    def close(self, ok: bool) -> None:
        if not ok:
            if self.fmt == "csv":
                self.fh.write("# incomplete\n")
            else:
                self.fh.write(json.dumps({"record": "incomplete"}) + "\n")
            self.fh.flush()
        if self.fh is not sys.stdout:
            self.fh.close()
            if ok:
                os.replace(self.final_path + ".partial", self.final_path)


# ---------------------------------------------------------------- trials


def trial_scramble(cfg: dict, trial: int) -> dict:
    rs = RandomSource(cfg["seed"]).child(trial)
    n = cfg["n"]
    if cfg["model"] == "sequential":
        gates = circuits.sample_sequential_circuit(circuits.InteractionGraph.complete(n), cfg["t"], rs.child(0))
        circuit = circuits.parallelize(gates, n)
        d = None
    elif cfg["model"] == "matching":
        circuit = circuits.sample_matching_circuit(n, cfg["depth"], rs.child(0))
        d = None
    else:
        side = round(n ** (1 / cfg["d"]))
        cg = circuits.CoarseGraining(cfg["d"], side, cfg["cell_side"] or circuits.default_cell_side(cfg["d"], side))
        g = cfg["gates_per_step"] or circuits.default_gates_per_coarse_step(n)
        circuit = circuits.sample_coarse_lattice_circuit(cg, cfg["depth"], g, rs.child(0))
        d = cfg["d"]
    weights = stabilizer.check_weight_lightcone(circuit, 0, d)
    tab = stabilizer.StabilizerTableau(n).apply_gates(circuit)
    sub = rs.child(1).gen.choice(n, size=cfg["subset"], replace=False)
    return {
        "gates": circuit.gate_count,
        "depth": circuit.depth,
        "pauli_weight": int(weights[-1]),
        "purity_excess": stabilizer.purity_excess(tab, sub),
    }


def trial_parallelize(cfg: dict, trial: int) -> dict:
    rs = RandomSource(cfg["seed"]).child(trial)
    qa, qb = circuits.InteractionGraph.complete(cfg["n"]).sample_pairs(cfg["t"], rs)
    return {"depth": circuits.parallel_depth(qa, qb, cfg["n"])}


def trial_decouple(cfg: dict, trial: int) -> dict:
    rs = RandomSource(cfg["seed"]).child(trial)
    setup = stabilizer.DecouplingSetup(cfg["n"], cfg["m"], cfg["mode"])
    circuit = circuits.sample_matching_circuit(cfg["n"], cfg["depth"], rs.child(0))
    sub = rs.child(1).gen.choice(cfg["n"], size=cfg["subset_size"], replace=False)
    return {"trace_distance": stabilizer.decoupling_distance(setup, circuit, sub)}


def trial_code_distance(cfg: dict, trial: int) -> dict:
    rs = RandomSource(cfg["seed"]).child(trial)
    gates = circuits.sample_sequential_circuit(circuits.InteractionGraph.complete(cfg["n"]), cfg["t"], rs)
    tab = stabilizer.StabilizerTableau(cfg["n"]).apply_gates(gates)
    return {"distance": stabilizer.code_distance(tab, cfg["m"])}


TRIAL_FUNCS = {
    "scramble": (trial_scramble, ["gates", "depth", "pauli_weight", "purity_excess"]),
    "parallelize": (trial_parallelize, ["depth"]),
    "decouple": (trial_decouple, ["trace_distance"]),
    "code-distance": (trial_code_distance, ["distance"]),
}


def _summary_stats(rows: list[dict], fields: list[str]) -> dict:
    out = {}
    for f in fields:
        vals = np.array([r[f] for r in rows], dtype=np.float64)
        out[f] = float(vals.mean())
        out[f + "_q50"] = float(np.quantile(vals, 0.5))
        out[f + "_q99"] = float(np.quantile(vals, 0.99))
        out[f + "_max"] = float(vals.max())
    return out


# ---------------------------------------------------------------- commands


def _validate(args) -> None:
    def need(cond, msg):
        if not cond:
            raise ValueError(msg)

    c = args.command
    if hasattr(args, "trials") and args.trials is not None:
        need(args.trials >= 1, "trials must be >= 1")
    if c == "scramble":
        need(args.n >= 2, "n must be >= 2")
        need(0 <= args.subset <= args.n, "subset must lie in 0..n")
        if args.model == "sequential":
            need(args.t is not None and args.t >= 0, "sequential model needs --t >= 0")
        else:
            need(args.depth is not None and args.depth >= 0, f"{args.model} model needs --depth >= 0")
        if args.model == "lattice":
            side = round(args.n ** (1 / args.d))
            need(side**args.d == args.n, "lattice model needs n = side^d")
            need(args.depth >= 1, "lattice model needs --depth (coarse steps) >= 1")
    elif c == "parallelize":
        need(args.n >= 2 and args.t >= 0, "need n >= 2 and t >= 0")
    elif c == "subset":
        need(args.n >= 2 and args.depth >= 0, "need n >= 2 and depth >= 0")
        need(0 < args.f < 1, "f must lie in (0, 1)")
        need(args.c is None or 0 <= args.c <= args.n, "c must lie in 0..n")
    elif c == "decouple":
        need(1 <= args.m <= args.n, "need 1 <= m <= n")
        need(0 <= args.subset_size <= args.n, "subset-size must lie in 0..n")
    elif c == "code-distance":
        need(args.n <= stabilizer.MAX_DISTANCE_QUBITS, f"n must be <= {stabilizer.MAX_DISTANCE_QUBITS}")
        need(1 <= args.m < args.n, "need 1 <= m < n")
    elif c == "gap":
        need(all(2 <= n <= moment_gap.MAX_QUBITS for n in args.n), f"n must lie in 2..{moment_gap.MAX_QUBITS}")
    elif c == "hitting":
        need(args.a >= 1 and 0 < args.p < 1, "need a >= 1 and 0 < p < 1")
    elif c == "weightchain":
        need(args.n >= 2 and 1 <= args.from_ <= args.n, "need n >= 2 and 1 <= from <= n")
        need(args.t >= 0 and 0 < args.f < 0.5, "need t >= 0 and 0 < f < 1/2")


def _base(args, chash, trial=None, record="trial"):
    return {"record": record, "experiment": args.command, "config_hash": chash, "seed": args.seed, "trial": trial}


def run_trials(args, writer: RecordWriter, chash: str) -> None:
    func, fields = TRIAL_FUNCS[args.command]
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",)}
    t0 = time.perf_counter()
    rows = []
    idx = range(args.trials)
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = pool.map(func, [cfg] * args.trials, idx)
            for i, row in zip(idx, results):
                rows.append(row)
                writer.write({**_base(args, chash, i), **row})
    else:
        for i in idx:
            row = func(cfg, i)
            rows.append(row)
            writer.write({**_base(args, chash, i), **row})
    summary = _summary_stats(rows, fields)
    if args.command == "parallelize":
        summary["bound_8log2n"] = 8 * math.log2(args.n)
        summary["depth_over_log2n_q99"] = summary["depth_q99"] / math.log2(args.n)
    writer.write({**_base(args, chash, record="summary"), **summary,
                  "wall_time": time.perf_counter() - t0, "version": _version()})


def run_subset(args, writer, chash):
    t0 = time.perf_counter()
    rs = RandomSource(args.seed)
    sizes, final = subset_chain.growth_batch(args.n, args.depth, args.trials, rs.child(0))
    thr = math.floor(args.f * args.n)
    contained = None
    if args.c is not None:
        gen = rs.child(1).gen
        contained = []
        for row in final:
            excl = gen.choice(args.n, size=args.c, replace=False) if args.c else np.array([], dtype=int)
            contained.append(int(not row[excl].any()))
    for i in range(args.trials):
        rec = {"final_size": int(sizes[i, -1]), "below_fn": int(sizes[i, -1] <= thr)}
        if contained is not None:
            rec["contained"] = contained[i]
        writer.write({**_base(args, chash, i), **rec})
    hits = int(np.count_nonzero(sizes[:, -1] <= thr))
    lo, hi = subset_chain.wilson(hits, args.trials)
    summary = {"final_size": float(sizes[:, -1].mean()), "below_fn": hits / args.trials, "ci_low": lo, "ci_high": hi}
    if contained is not None:
        summary["contained"] = float(np.mean(contained))
        summary["reference"] = (1 - args.f) ** args.c
    if args.exact:
        summary["exact"] = subset_chain.exact_survival(args.n, args.f, args.depth)
    writer.write({**_base(args, chash, record="summary"), **summary,
                  "wall_time": time.perf_counter() - t0, "version": _version()})


def _graph(args, n):
    if args.graph == "line":
        return circuits.InteractionGraph.line(n)
    if args.graph == "complete":
        return circuits.InteractionGraph.complete(n)
    side = round(n ** (1 / args.d))
    if side**args.d != n:
        raise ValueError(f"lattice graph needs n = side^{args.d}")
    return circuits.InteractionGraph.lattice(args.d, side)


def run_gap(args, writer, chash):
    t0 = time.perf_counter()
    for i, n in enumerate(args.n):
        rep = moment_gap.spectral_gap(moment_gap.build_chain(_graph(args, n)), solver=args.solver)
        writer.write({**_base(args, chash, i), "n": rep.n, "graph": rep.graph, "gap": rep.gap,
                      "lambda2": rep.lambda2, "solver_residual": rep.solver_residual, "gap_times_n": rep.gap * rep.n})
    writer.write({**_base(args, chash, record="summary"), "wall_time": time.perf_counter() - t0, "version": _version()})


def run_hitting(args, writer, chash):
    t0 = time.perf_counter()
    spec = hitting.WalkSpec.uniform(args.a, args.p, args.p_minus)
    exact = hitting.hitting_probability(spec)
    rec = {"exact": exact}
    if args.p_minus is None:
        alpha = args.p / (1 - args.p)
        rec["closed_form"] = hitting.hitting_probability_uniform(alpha, alpha, args.a)
    if args.walks:
        rec["mc"] = hitting.hitting_probability_mc(spec, args.walks, RandomSource(args.seed))
        rec["sigma"] = math.sqrt(exact * (1 - exact) / args.walks)
    writer.write({**_base(args, chash, record="summary"), **rec,
                  "wall_time": time.perf_counter() - t0, "version": _version()})


def run_weightchain(args, writer, chash):
    t0 = time.perf_counter()
    tail = wc.tail_probability(args.n, args.from_, args.t, args.f)
    bound = wc.TheoremBound(args.n, args.from_, args.f)
    writer.write({**_base(args, chash, record="summary"), "tail": tail, "threshold": wc.threshold(args.n, args.f),
                  "first_term": bound.first_term, "second_term": bound.second_term,
                  "valid_regime": bound.valid_regime, "wall_time": time.perf_counter() - t0, "version": _version()})


def run_verify(args, writer, chash):
    ctx = verify.Context(transition=verify.mutated_transition if args.mutate else verify.wc.transition_row_exact)
    results = verify.run(args.suite, ctx)
    for i, r in enumerate(results):
        writer.write({**_base(args, chash, i), "check": r.name, "ok": int(r.ok), "detail": r.detail})
    failed = [r.name for r in results if not r.ok]
    writer.write({**_base(args, chash, record="summary"), "ok": int(not failed), "failed": ";".join(failed),
                  "version": _version(), "backend": kernels.BACKEND})
    if failed:
        raise VerifyFailed(", ".join(failed))


class VerifyFailed(RuntimeError):
    pass


RUNNERS = {
    "subset": (run_subset, ["final_size", "below_fn", "contained", "ci_low", "ci_high", "reference", "exact"]),
    "gap": (run_gap, ["n", "graph", "gap", "lambda2", "solver_residual", "gap_times_n"]),
    "hitting": (run_hitting, ["exact", "closed_form", "mc", "sigma"]),
    "weightchain": (run_weightchain, ["tail", "threshold", "first_term", "second_term", "valid_regime"]),
    "verify": (run_verify, ["check", "ok", "detail", "failed", "backend"]),
}


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, default_format: str = "csv") -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--config", default=None, help="key = value file; flags override it")
    p.add_argument("--workers", type=int, default=1, help="trial worker processes")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")


def _int_list(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scrambling", description="Random circuit scrambling experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scramble", help="sample circuits, evolve a tableau, record weight and purity")
    p.add_argument("--model", choices=("sequential", "matching", "lattice"), default="matching")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, default=None, help="gate count (sequential model)")
    p.add_argument("--depth", type=int, default=None, help="levels (matching) or coarse steps (lattice)")
    p.add_argument("--d", type=int, default=2, help="lattice dimension")
    p.add_argument("--cell-side", type=int, default=None)
    p.add_argument("--gates-per-step", type=int, default=None)
    p.add_argument("--subset", type=int, default=2, help="size of the random purity subset")
    p.add_argument("--trials", type=int, default=1)
    _common(p)

    p = sub.add_parser("parallelize", help="greedy depth of sequential complete-graph circuits")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    _common(p)

    p = sub.add_parser("subset", help="support growth under random matchings")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--f", type=float, default=0.125)
    p.add_argument("--c", type=int, default=None, help="also test containment in a random (n - c)-subset")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--exact", action="store_true", help="add the exact survival probability")
    _common(p)

    p = sub.add_parser("gap", help="spectral gap of the full Pauli chain")
    p.add_argument("--n", type=_int_list, required=True, help="one or more n, comma separated")
    p.add_argument("--graph", choices=("line", "complete", "lattice"), default="line")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--solver", choices=("auto", "dense", "lanczos", "power"), default="auto")
    _common(p)

    p = sub.add_parser("hitting", help="hitting probability of a biased walk")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--p", type=float, required=True, help="right-step probability at positions >= 1")
    p.add_argument("--p-minus", type=float, default=None, help="right-step probability at 0")
    p.add_argument("--walks", type=int, default=0)
    _common(p)

    p = sub.add_parser("decouple", help="trace distance of rho_MS under matching circuits")
    p.add_argument("--n", type=int, required=True, help="circuit qubits")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--mode", choices=(stabilizer.PURE_ANCILLA, stabilizer.ENTANGLED_ANCILLA), default=stabilizer.PURE_ANCILLA)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--subset-size", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    _common(p)

    p = sub.add_parser("code-distance", help="distance of codes encoded by random circuits")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--trials", type=int, default=10)
    _common(p)

    p = sub.add_parser("weightchain", help="exact tail of the weight chain")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--from", dest="from_", type=int, default=1)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--f", type=float, required=True)
    _common(p, default_format="json")

    p = sub.add_parser("verify", help="run the self-check suites")
    p.add_argument("--suite", choices=("fast", "full"), default="fast")
    p.add_argument("--mutate", action="store_true", help="negative control with a corrupted transition row")
    _common(p)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config and argv:
        values = read_config(known.config)
        values.pop("command", None)
        sub = parser._subparsers._group_actions[0].choices[argv[0]]
        dests = {a.dest for a in sub._actions}
        unknown = set(values) - dests
        if unknown:
            parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
        sub.set_defaults(**values)
        for action in sub._actions:
            if action.dest in values:
                action.required = False
                if action.type is _int_list:
                    action.default = _int_list(values[action.dest])
                elif isinstance(action, argparse._StoreTrueAction):
                    action.default = values[action.dest].lower() in ("1", "true", "yes")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        _validate(args)
    except ValueError as exc:
        print(f"error: invalid {args.command} config: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        sys.stdout.write(config_text(args))
        return 0
    chash = config_hash(args)
    if args.command in TRIAL_FUNCS:
        runner, fields = run_trials, TRIAL_FUNCS[args.command][1]
        fields = fields + [f + s for f in fields for s in ("_q50", "_q99", "_max")]
        if args.command == "parallelize":
            fields += ["bound_8log2n", "depth_over_log2n_q99"]
    else:
        runner, fields = RUNNERS[args.command]
    writer = RecordWriter(args.out, args.format, fields)
    status, complete = 1, False
    try:
        runner(args, writer, chash)
        status, complete = 0, True
    except VerifyFailed as exc:
        print(f"verify failed: {exc}", file=sys.stderr)
        complete = True
    except (ValueError, RuntimeError, AssertionError) as exc:
        print(f"error: {args.command} failed: {exc}", file=sys.stderr)
    finally:
        writer.close(complete)
    return status


if __name__ == "__main__":
    sys.exit(main())
