"""Command line front end: root runs, instance checks, generators, benchmarks."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .envelope import envelope_eval
from .errors import CapacityError
from .harness import RunConfig
from .models import BmpInstance
from .oracles import (
    Graph,
    _cube_bits,
    cut_oracle,
    is_submodular_bruteforce,
    ss_decompose,
)


def _add_root(sub):
    p = sub.add_parser("root", help="run the root-node cut loop on one instance")
    p.add_argument("instance", help="instance file (.mc or .pol)")
    p.add_argument("--cuts", default="submodular", choices=harness.MODES, help="cut mode")
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-cuts", type=int, default=50, help="cuts per round cap")
    p.add_argument("--primal", type=float, default=None, help="reference optimum override")
    p.add_argument("--validate", default="auto", choices=("auto", "on", "off"))
    p.add_argument("--report", default=None, help="write a one-row CSV here")


def _add_verify(sub):
    p = sub.add_parser("verify", help="brute-force sanity checks on one instance")
    p.add_argument("instance")


def _add_gen(sub):
    p = sub.add_parser("gen", help="generate seeded instances")
    p.add_argument("kind", choices=harness.GENERATORS)
    p.add_argument("-n", type=int, required=True, help="number of variables")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--density", type=float, default=None)
    p.add_argument("--max-lag", type=int, default=3, help="autocorr lag span")
    p.add_argument("--out", default=".", help="output directory")


def _add_bench(sub):
    p = sub.add_parser("bench", help="run a directory of instances under a config")
    p.add_argument("directory")
    p.add_argument("--config", default=None, help="JSON file with RunConfig keys (+ optional 'modes' list)")
    p.add_argument("--report", default=None, help="write the per-run CSV here")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subcut",
                                 description="intersection cuts for submodular objectives over binary variables")
    ap.add_argument("-v", "--verbose", action="store_true", help="log model/cut lines")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_root(sub)
    _add_verify(sub)
    _add_gen(sub)
    _add_bench(sub)
    return ap


def cmd_root(args) -> int:
    config = RunConfig(mode=args.cuts, rounds=args.rounds, seed=args.seed,
                       max_cuts_per_round=args.max_cuts, primal=args.primal,
                       validate_cuts=args.validate)
    report = harness.run_instance(args.instance, config)
    print(harness.CSV_HEADER)
    print(report.csv_row())
    if report.failed:
        print("warning: LP failure, report is partial", file=sys.stderr)
    if args.report:
        harness.write_report_csv([report], args.report)
    return 1 if report.failed else 0


def _check(name, ok, detail="") -> bool:
    tag = "PASS" if ok else "FAIL"
    print(f"{tag} {name}{(' ' + detail) if detail and not ok else ''}")
    return ok


def _verify_graph(graph: Graph) -> bool:
    ok = True
    oracle = cut_oracle(graph)
    ok &= _check("normalized(f(0)=0)", abs(oracle.value(np.zeros(graph.n))) <= 1e-12)
    if graph.n <= 12:
        ok &= _check("submodular", is_submodular_bruteforce(oracle))
    else:
        print("SKIP submodular (n > 12)")
    if graph.n <= 10:
        worst = 0.0
        for x in _cube_bits(graph.n):
            worst = max(worst, abs(envelope_eval(oracle, x).value - oracle.value(x)))
        ok &= _check("extension_identity", worst <= 1e-9, f"max |F(x)-f(x)| = {worst:.3g}")
    else:
        print("SKIP extension_identity (n > 10)")
    ok &= _verify_bound(graph)
    return ok


def _verify_poly(instance: BmpInstance) -> bool:
    ok = True
    n = instance.n
    funcs = [("objective", instance.objective)]
    funcs += [(f"constraint{i + 1}", c) for i, c in enumerate(instance.constraints)]
    for label, func in funcs:
        ss = ss_decompose(func, level=1)
        if n <= 10:
            ok &= _check(f"{label}_parts_submodular",
                         is_submodular_bruteforce(ss.f1) and is_submodular_bruteforce(ss.f2))
        else:
            print(f"SKIP {label}_parts_submodular (n > 10)")
        if n <= 14:
            worst = 0.0
            for x in _cube_bits(n):
                worst = max(worst, abs(ss.f1.value(x) - ss.f2.value(x) - func.evaluate(x)))
            ok &= _check(f"{label}_decomposition_identity", worst <= 1e-12,
                         f"max error = {worst:.3g}")
        else:
            print(f"SKIP {label}_decomposition_identity (n > 14)")
    ok &= _verify_bound(instance)
    return ok


def _verify_bound(problem) -> bool:
    from . import simplex

    if problem.n > harness.BRUTE_FORCE_PRIMAL_LIMIT:
        print("SKIP bound_dominates_optimum (n > 20)")
        return True
    best = harness.brute_force_primal(problem)
    model, _, _ = harness.build_model(problem)
    sol = simplex.solve(model)
    if sol.status != simplex.OPTIMAL:
        return _check("bound_dominates_optimum", False, f"LP status {sol.status}")
    return _check("bound_dominates_optimum", sol.objective >= best - 1e-7,
                  f"d1 = {sol.objective:.6g} < p = {best:.6g}")


def cmd_verify(args) -> int:
    problem = harness.load_instance(args.instance)
    if isinstance(problem, Graph):
        ok = _verify_graph(problem)
    else:
        ok = _verify_poly(problem)
    return 0 if ok else 1


def cmd_gen(args) -> int:
    paths = harness.generate_instances(args.kind, args.n, count=args.count,
                                       seed=args.seed, out_dir=args.out,
                                       density=args.density, max_lag=args.max_lag)
    for p in paths:
        print(p)
    return 0


def cmd_bench(args) -> int:
    directory = Path(args.directory)
    paths = sorted(directory.glob("*.mc")) + sorted(directory.glob("*.pol"))
    if not paths:
        print(f"no .mc or .pol instances under {directory}", file=sys.stderr)
        return 1
    modes = None
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
        config = RunConfig.from_dict(raw)
        modes = raw.get("modes")
    else:
        config = RunConfig()
    reports = harness.run_benchmark(paths, config, modes=modes)
    if args.report:
        harness.write_report_csv(reports, args.report)
    print(harness.CSV_HEADER)
    for r in reports:
        print(r.csv_row())
    summary = harness.aggregate(reports)
    print("mode,closed,relative,time_s,cuts,runs")
    for mode, row in summary.items():
        print(f"{mode},{row['closed']:.4f},{row['relative']:.4f},"
              f"{row['time']:.3f},{row['cuts']:.2f},{row['runs']}")
    return 0


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "root":
            return cmd_root(args)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "bench":
            return cmd_bench(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
