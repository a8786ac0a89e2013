"""Command-line entry point: ``costima <subcommand> ...``.

Thread count for the sampling kernel comes from ``--workers`` or the
``COSTIMA_WORKERS`` environment variable; it never changes any output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import diffusion, oracle
from .diffusion import SamplingConfig
from .experiment import ExperimentSpec, gen_random_instance, run_experiment
from .graph import (CandidateEdge, InstanceError, ProblemInstance, atomic_write_text,
                    load_instance, save_instance, write_solution)
from .reduction import load_msc, msc_to_ima, random_msc
from .solvers import SolverConfig, SolverError, solve

log = logging.getLogger("costima")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", required=True, help="instance file (JSON, or edge list)")
    p.add_argument("--format", choices=["json", "edgelist"], default="json")
    p.add_argument("--seeds", help="edge-list format: seeds file")
    p.add_argument("--candidates", help="edge-list format: candidates file")
    p.add_argument("--budget", type=float, help="override / supply the budget")


def _load(args) -> ProblemInstance:
    return load_instance(args.instance, args.format, seeds=args.seeds,
                         candidates=args.candidates, budget=args.budget)


def parse_edges_added(inst: ProblemInstance, spec: str | None) -> list[CandidateEdge]:
    """Edges to add: a file of ``src dst [prob [cost]]`` lines, or inline
    ``src:dst[:prob],...``. Missing probabilities come from the candidate pool."""
    if not spec:
        return []
    if Path(spec).is_file():
        rows = []
        for raw in Path(spec).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                rows.append(line.split())
    else:
        rows = [item.split(":") for item in spec.split(",") if item.strip()]
    out = []
    for row in rows:
        src, dst = int(row[0]), int(row[1])
        known = inst.candidate_index.get((src, dst))
        if len(row) >= 3:
            cost = float(row[3]) if len(row) >= 4 else (
                inst.candidates[known].cost if known is not None else 0.0)
            out.append(CandidateEdge(src, dst, float(row[2]), cost))
        elif known is not None:
            out.append(inst.candidates[known])
        else:
            raise InstanceError(f"edge ({src},{dst}) is not a candidate and has no probability")
    for c in out:
        if c.src not in inst.seeds:
            raise InstanceError(f"candidate source not a seed: {c}")
        if (c.src, c.dst) in inst.edge_pairs:
            raise InstanceError(f"candidate duplicates an existing edge: {c}")
    return out


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_estimate(args) -> int:
    inst = _load(args)
    S = parse_edges_added(inst, args.edges_added)
    cfg = SamplingConfig(args.samples, args.seed, args.lam, args.delta)
    _emit(diffusion.estimate_sigma(inst, S, cfg).to_dict(), args.out)
    return 0


def cmd_oracle(args) -> int:
    inst = _load(args)
    S = parse_edges_added(inst, args.edges_added)
    try:
        ev = oracle.ExactEvaluator(inst, S, table_limit=0)
    except oracle.OracleTooLarge as exc:
        print(f"error: {exc}; use 'estimate' instead", file=sys.stderr)
        return 2
    value = ev.sigma(range(len(S)))
    _emit({"sigma": f"{value:.9f}", "free_edges": ev.free_edges,
           "outcomes": ev.num_outcomes, "edge_set_hash": diffusion.edge_set_hash(S)}, args.out)
    return 0


def cmd_solve(args) -> int:
    inst = _load(args)
    cfg = SolverConfig(args.sigma, SamplingConfig(args.samples, args.seed), args.M,
                       args.stop_on_zero_gain)
    sol = solve(inst, args.algo, cfg)
    sol.check(inst)
    write_solution(sol, args.out, args.out_format)
    if args.trace_csv:
        write_solution(sol, args.trace_csv, "csv")
    log.info("%s: sigma=%.6f cost=%.6f edges=%d", args.algo, sol.sigma, sol.total_cost,
             len(sol.chosen))
    return 0


def cmd_gen_msc(args) -> int:
    if args.sets.startswith("random:"):
        parts = args.sets.split(":")
        density = float(parts[2]) if len(parts) > 2 else 0.3
        msc = random_msc(args.universe, int(parts[1]), args.k, args.seed, density)
    else:
        msc = load_msc(args.sets, args.universe, args.k)
    save_instance(msc_to_ima(msc, args.extra_seeds), args.out)
    if args.sets_out:
        atomic_write_text(args.sets_out, "".join(" ".join(map(str, sorted(s))) + "\n"
                                                 for s in msc.sets))
    return 0


def cmd_gen_random(args) -> int:
    inst = gen_random_instance(args.n, args.density, args.prob, args.num_seeds,
                               args.candidates, args.cand_prob, args.cost, args.budget,
                               args.seed, args.edges)
    save_instance(inst, args.out)
    return 0


def cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_file(args.spec)
    if args.out_dir:
        spec.out_dir = args.out_dir
    if args.timings:
        spec.timings = True
    _, ok = run_experiment(spec)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="costima", description=__doc__.splitlines()[0])
    parser.add_argument("--workers", type=int, help="kernel threads (default $COSTIMA_WORKERS)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, hlp in (("estimate", cmd_estimate, "Monte Carlo sigma of A with edges added"),
                          ("oracle", cmd_oracle, "exact sigma by enumeration (tiny instances)")):
        p = sub.add_parser(name, help=hlp)
        _add_instance_args(p)
        p.add_argument("--edges-added", help="file of 'src dst [prob [cost]]' or 'src:dst,...'")
        if name == "estimate":
            p.add_argument("--samples", type=int, default=None)
            p.add_argument("--seed", type=_u64, default=0)
            p.add_argument("--lambda", dest="lam", type=float)
            p.add_argument("--delta", type=float)
        p.add_argument("--out", help="write JSON here instead of stdout")
        p.set_defaults(func=fn)

    p = sub.add_parser("solve", help="run a solver and write the solution")
    _add_instance_args(p)
    p.add_argument("--algo", required=True,
                   help="greedy | cost-greedy | enum-greedy | brute | baseline:<name>")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--sigma", choices=["estimate", "exact"], default="estimate")
    p.add_argument("--M", type=int, default=3)
    p.add_argument("--stop-on-zero-gain", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--out-format", choices=["json", "csv"], default="json")
    p.add_argument("--trace-csv", help="also write the per-step trace as CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen-msc", help="set-coverage instance -> unit-cost augmentation instance")
    p.add_argument("--universe", type=int, help="|X| (inferred from the sets file if omitted)")
    p.add_argument("--sets", required=True, help="sets file, or random:NUM_SETS[:DENSITY]")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--extra-seeds", type=int, default=0, help="isolated additional seeds")
    p.add_argument("--sets-out", help="also write the set family (one set per line)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_msc)

    p = sub.add_parser("gen-random", help="reproducible random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--edges", type=int, help="exact edge count (overrides --density)")
    p.add_argument("--prob", default="uniform:0:1")
    p.add_argument("--num-seeds", type=int, default=1)
    p.add_argument("--candidates", default="all", help="all | sample:K")
    p.add_argument("--cand-prob", default=None)
    p.add_argument("--cost", default="unit")
    p.add_argument("--budget", type=float, default=1.0)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_random)

    p = sub.add_parser("experiment", help="batch runs from a JSON experiment spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--timings", action="store_true", help="also write timings.csv")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    diffusion.configure_workers(args.workers)
    if getattr(args, "samples", 0) is None and not (getattr(args, "lam", None)
                                                     and getattr(args, "delta", None)):
        args.samples = 1000
    try:
        return args.func(args)
    except (InstanceError, SolverError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
