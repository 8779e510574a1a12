"""Command-line front door.

Subcommands: gen, solve, check, rigidity, selfcheck, sweep. Exit codes are
a stable scripting contract: 0 success (including Undetermined checks),
2 usage or parse failure, 3 solver hit its iteration cap, 4 disconnected or
otherwise infeasible graph, 5 a condition check failed.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from .conditions import (
    ConditionReport,
    Verdict,
    check_dominance,
    check_good_shape,
    default_good_shape_params,
    parallel_rigidity,
    report_text,
    reports_csv,
    self_consistency,
)
from .geometry import nrmse
from .experiments import Axis, SweepSpec, records_csv, run_sweep, summarize, summary_csv
from .solvers import (
    SolverParams,
    SolverStatus,
    dump_results,
    oracle_scale,
    solve_lud,
    solve_shapefit,
)
from .viewgraph import (
    DisconnectedGraphError,
    EdgeFraction,
    HlvParams,
    MaxDegreeBound,
    corruption_level,
    dump_instance,
    generate_instance,
    load_instance,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MAX_ITERS = 3
EXIT_INFEASIBLE = 4
EXIT_CONDITION_FAILED = 5


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return load_instance(fh.read())
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from exc


def _print_report(report: ConditionReport, words: Optional[Dict[Verdict, str]] = None) -> None:
    if words is None:
        print(report_text(report), end="")
        return
    print(f"{report.condition}:")
    print(f"  verdict: {words.get(report.verdict, report.verdict.value)}")
    for name, sub in report.checks.items():
        print(f"  {name}: {sub.value}")
    for name, value in report.constants.items():
        print(f"  {name}: {value:.12g}")
    for note in report.details:
        print(f"  note: {note}")


def _cmd_gen(args) -> int:
    if args.corrupt_frac is not None:
        corruption = EdgeFraction(args.corrupt_frac)
    elif args.corrupt_maxdeg is not None:
        corruption = MaxDegreeBound(args.corrupt_maxdeg)
    else:
        corruption = EdgeFraction(0.0)
    params = HlvParams(n=args.n, p=args.p, corruption=corruption,
                       noise_sigma=args.sigma, seed=args.seed)
    instance = generate_instance(params)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_instance(instance))
    print(f"edges={instance.graph.m} epsilon_b={corruption_level(instance.graph):.6g}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    instance = _load(args.infile)
    params = SolverParams(max_iters=args.max_iters, primal_tol=args.tol, dual_tol=args.tol)
    methods = ["lud", "shapefit"] if args.method == "both" else [args.method]
    solvers = {"lud": solve_lud, "shapefit": solve_shapefit}
    results = {}
    for name in methods:
        results[name] = solvers[name](instance.graph, params)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dump_results(instance, results))
    code = EXIT_OK
    for name in methods:
        res = results[name]
        print(f"{name}: objective={res.objective:.12g} iterations={res.iterations} "
              f"status={res.status.value}")
        print(f"NRMSE={nrmse(res.locations, instance.ground_truth):.12g}")
        if res.status is SolverStatus.MAX_ITERS:
            code = EXIT_MAX_ITERS
    return code


def _cmd_check(args) -> int:
    instance = _load(args.infile)
    p = args.p
    if p is None and instance.params is not None:
        p = instance.params.p
    if p is None:
        return _fail("instance carries no generation parameters; pass --p", EXIT_USAGE)
    params = default_good_shape_params(instance.graph.n, p)
    c_star = oracle_scale(instance).c_star
    rng = np.random.default_rng(args.seed)
    shape = check_good_shape(instance, c_star, params, rng,
                             wd_samples=args.samples)
    shape.seed = args.seed
    dominance = check_dominance(instance, c_star, trials=args.trials,
                                rng=rng, seed=args.seed)
    _print_report(shape)
    _print_report(dominance)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(reports_csv([shape, dominance]))
    failed = Verdict.FAIL in (shape.verdict, dominance.verdict)
    return EXIT_CONDITION_FAILED if failed else EXIT_OK


def _cmd_rigidity(args) -> int:
    instance = _load(args.infile)
    locations = instance.ground_truth if args.generic else None
    report = parallel_rigidity(instance.graph, locations=locations)
    _print_report(report, {Verdict.PASS: "rigid", Verdict.FAIL: "not-rigid"})
    return EXIT_OK if report.verdict is Verdict.PASS else EXIT_CONDITION_FAILED


def _cmd_selfcheck(args) -> int:
    instance = _load(args.infile)
    report = self_consistency(instance.graph)
    _print_report(report, {Verdict.PASS: "self-consistent",
                           Verdict.FAIL: "not-self-consistent"})
    return EXIT_OK if report.verdict is Verdict.PASS else EXIT_CONDITION_FAILED


_SWEEP_KEYS = {"n", "p", "axis", "grid", "seeds", "methods", "master_seed",
               "max_iters", "tol", "prefix"}
_AXES = {"corruptionfraction": Axis.CORRUPTION_FRACTION,
         "corruption": Axis.CORRUPTION_FRACTION,
         "noisesigma": Axis.NOISE_SIGMA,
         "noise": Axis.NOISE_SIGMA}


def _parse_sweep_config(text: str) -> tuple:
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno} is not key=value: {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _SWEEP_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = value.strip()
    for required in ("n", "p", "axis", "grid"):
        if required not in values:
            raise ValueError(f"missing config key {required!r}")
    axis = _AXES.get(values["axis"].lower())
    if axis is None:
        raise ValueError(f"axis must be CorruptionFraction or NoiseSigma, got {values['axis']!r}")
    methods = tuple(
        m.strip().lower() for m in values.get("methods", "lud,shapefit").split(",")
    )
    solver_params = SolverParams(
        max_iters=int(values.get("max_iters", 50000)),
        primal_tol=float(values.get("tol", 1e-8)),
        dual_tol=float(values.get("tol", 1e-8)),
    )
    spec = SweepSpec(
        n=int(values["n"]),
        p=float(values["p"]),
        axis=axis,
        grid=tuple(float(v) for v in values["grid"].split(",")),
        seeds=int(values.get("seeds", 10)),
        methods=methods,
        solver_params=solver_params,
        master_seed=int(values.get("master_seed", 0)),
    )
    return spec, values.get("prefix", "sweep")


def _cmd_sweep(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            spec, prefix = _parse_sweep_config(fh.read())
    except OSError as exc:
        raise ValueError(f"cannot read {args.config}: {exc.strerror}") from exc
    jobs = args.jobs
    env_jobs = os.environ.get("LUDREC_JOBS")
    if env_jobs:
        try:
            jobs = int(env_jobs)
        except ValueError:
            return _fail(f"LUDREC_JOBS must be an integer, got {env_jobs!r}", EXIT_USAGE)
    records = run_sweep(spec, jobs=max(1, jobs))
    trials_path = f"{prefix}_trials.csv"
    summary_path = f"{prefix}_summary.csv"
    with open(trials_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(records_csv(records))
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary_csv(summarize(records)))
    print(f"wrote {trials_path} and {summary_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ludrec",
        description="Camera location recovery from corrupted pairwise directions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="sample a model instance")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--p", type=float, required=True)
    group = gen.add_mutually_exclusive_group()
    group.add_argument("--corrupt-frac", type=float, default=None,
                       help="corrupt a uniform fraction of edges")
    group.add_argument("--corrupt-maxdeg", type=float, default=None,
                       help="corrupt edges keeping per-vertex bad degree below this fraction of n")
    gen.add_argument("--sigma", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    solve = sub.add_parser("solve", help="recover locations from an instance file")
    solve.add_argument("--in", dest="infile", required=True)
    solve.add_argument("--method", choices=["lud", "shapefit", "both"], default="lud")
    solve.add_argument("--tol", type=float, default=1e-8)
    solve.add_argument("--max-iters", type=int, default=50000)
    solve.add_argument("--out", default=None)
    solve.set_defaults(func=_cmd_solve)

    check = sub.add_parser("check", help="good-shape and dominance reports")
    check.add_argument("--in", dest="infile", required=True)
    check.add_argument("--trials", type=int, default=1000)
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--p", type=float, default=None,
                       help="edge probability when the file has no generation header")
    check.add_argument("--samples", type=int, default=96,
                       help="sphere samples per well-distributedness estimate")
    check.add_argument("--csv", default=None)
    check.set_defaults(func=_cmd_check)

    rigidity = sub.add_parser("rigidity", help="parallel rigidity rank test")
    rigidity.add_argument("--in", dest="infile", required=True)
    rigidity.add_argument("--generic", action="store_true",
                          help="use directions derived from the stored locations")
    rigidity.set_defaults(func=_cmd_rigidity)

    selfcheck = sub.add_parser("selfcheck", help="self-consistency feasibility test")
    selfcheck.add_argument("--in", dest="infile", required=True)
    selfcheck.set_defaults(func=_cmd_selfcheck)

    sweep = sub.add_parser("sweep", help="corruption or noise sweep to CSV")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.set_defaults(func=_cmd_sweep)

    return parser


def entry(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except DisconnectedGraphError as exc:
        return _fail(str(exc), EXIT_INFEASIBLE)
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(entry())
