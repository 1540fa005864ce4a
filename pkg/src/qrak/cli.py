"""Batch command-line front end.

Exit codes: 0 ok, 2 invalid problem, 3 warnings under ``--strict``,
4 no valid solution found, 5 a simulation could not be started.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

from .evaluator import EvaluationFault
from .harness import SpawnFailure
from .problem import ProblemParseError, parse_problem_file, reformulation_hints, validate
from .problem.dsl import _render_binding, _render_relation
from .problem.model import SimBinding
from .report import legend_text, write_report, _table
from .solver import InfeasibleStart, SolveOptions, solve

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_WARNINGS = 3
EXIT_NO_SOLUTION = 4
EXIT_SPAWN = 5


def _err(*parts):
    print(*parts, file=sys.stderr)


def _load(path, check=True):
    """Parse ``path``; returns (instance, diagnostics) or raises ProblemParseError."""
    instance = parse_problem_file(path, validate=False)
    diags = validate(instance) if check else []
    if any(d.is_error for d in diags):
        raise ProblemParseError(diags)
    return instance, diags


def _load_or_exit(path):
    try:
        return _load(path)
    except (OSError, ProblemParseError) as exc:
        _report_load_error(path, exc)
        return None, None


def _report_load_error(path, exc):
    if isinstance(exc, ProblemParseError):
        for d in exc.diagnostics:
            _err(f"{path}: {d}")
    else:
        _err(f"{path}: {exc}")


def _binding(c):
    if isinstance(c.body, SimBinding):
        return _render_binding(c.body)
    return _render_relation(c)


def cmd_classify(args) -> int:
    if args.legend:
        sys.stdout.write(legend_text())
        if args.path is None:
            return EXIT_OK
    if args.path is None:
        _err("classify: a problem file is required unless --legend is given")
        return EXIT_INVALID
    instance, _ = _load_or_exit(args.path)
    if instance is None:
        return EXIT_INVALID
    rows = [(c.name, c.cls.code, str(c.cls.leaf), c.kind.value, _binding(c)) for c in instance.constraints]
    sys.stdout.write(_table(("name", "class", "leaf", "kind", "binding"), rows))
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        instance = parse_problem_file(args.path, validate=False)
        diags = validate(instance)
    except ProblemParseError as exc:
        diags = exc.diagnostics
    except OSError as exc:
        _err(f"{args.path}: {exc}")
        return EXIT_INVALID
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["severity", "code", "line", "col", "message"])
        for d in diags:
            w.writerow([d.severity, d.code, "" if d.line is None else d.line, "" if d.col is None else d.col, d.message])
    else:
        for d in diags:
            print(f"{args.path}: {d}")
        if not diags:
            print(f"{args.path}: ok")
    if any(d.is_error for d in diags):
        return EXIT_INVALID
    if diags and args.strict:
        return EXIT_WARNINGS
    return EXIT_OK


def _parse_x0(text, instance):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != instance.n:
        raise ValueError(f"--x0 has {len(parts)} values, problem has {instance.n} variables")
    point = {}
    for v, p in zip(instance.variables, parts):
        point[v.name] = p if v.labels else float(p)
    return instance.vector(point)


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def cmd_solve(args) -> int:
    instance, _ = _load_or_exit(args.path)
    if instance is None:
        return EXIT_INVALID
    try:
        x0 = _parse_x0(args.x0, instance) if args.x0 else None
    except (ValueError, KeyError) as exc:
        _err(f"solve: {exc}")
        return EXIT_INVALID
    out = Path(args.out)
    options = SolveOptions(
        x0=x0,
        delta0=args.delta0,
        delta_min=args.delta_min,
        max_evals=args.budget_evals,
        max_sims=args.budget_sims,
        seed=args.seed,
        shuffle_poll=args.shuffle_poll,
        restoration=args.restoration,
        skip_sim_on_relaxable_apriori=args.skip_sim_on_relaxable_apriori,
        run_dir=str(out),
    )
    try:
        report = solve(instance, options)
    except (SpawnFailure, EvaluationFault) as exc:
        _err(f"solve: {exc}")
        return EXIT_SPAWN
    except InfeasibleStart as exc:
        _err(f"solve: {exc}")
        return EXIT_NO_SOLUTION
    write_report(report, out)

    print(f"status: {report.status}")
    if report.success:
        print("x: " + ", ".join(f"{k}={_fmt(v)}" for k, v in report.x.items()))
        print(f"f: {_fmt(report.solution.f)}")
        print(f"h: {_fmt(report.solution.h)}")
    print(
        f"evaluations: {len(report.history)}  rejected a priori: {report.rejected_apriori}  "
        f"simulations: {report.simulations_executed}  cache hits: {report.cache_hits}"
    )
    print(f"reports: {out}")
    return EXIT_OK if report.success else EXIT_NO_SOLUTION


def cmd_hints(args) -> int:
    instance, _ = _load_or_exit(args.path)
    if instance is None:
        return EXIT_INVALID
    hints = reformulation_hints(instance)
    for h in hints:
        print(h)
    if not hints:
        print("no reformulation hints")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workdir", default=None, help="resolve relative paths against this directory")

    p = argparse.ArgumentParser(prog="qrak", description="Classify, check and solve constrained black-box problems.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="list constraints with their class and leaf")
    c.add_argument("path", nargs="?")
    c.add_argument("--legend", action="store_true", help="also print the nine-class legend")
    c.set_defaults(func=cmd_classify)

    v = sub.add_parser("validate", parents=[common], help="report errors and warnings")
    v.add_argument("path")
    v.add_argument("--strict", action="store_true", help="treat warnings as failures (exit 3)")
    v.add_argument("--format", choices=("text", "csv"), default="text")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve", parents=[common], help="run the direct-search solver")
    s.add_argument("path")
    s.add_argument("--x0", help="comma-separated starting point; labels for categorical variables")
    s.add_argument("--delta0", type=float, default=1.0)
    s.add_argument("--delta-min", type=float, default=1e-6)
    s.add_argument("--budget-sims", type=int, default=None)
    s.add_argument("--budget-evals", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--shuffle-poll", action="store_true", help="randomize poll order with --seed")
    s.add_argument("--restoration", action="store_true", help="repair an infeasible start before solving")
    s.add_argument("--skip-sim-on-relaxable-apriori", action="store_true")
    s.add_argument("--out", default="qrak-run", help="report directory")
    s.set_defaults(func=cmd_solve)

    h = sub.add_parser("hints", parents=[common], help="suggest reclassifications")
    h.add_argument("path")
    h.set_defaults(func=cmd_hints)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workdir:
        os.makedirs(args.workdir, exist_ok=True)
        os.chdir(args.workdir)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
