"""Command-line entry point.

Subcommands: ``solve``, ``sweep``, ``closed-loop``, ``oracle`` and ``bounds``.
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

import numpy as np

from powss.errors import PowssError
from powss.harness import (
    SweepConfig,
    default_workers,
    format_results,
    run_closed_loop,
    run_root_sweep,
)
from powss.problems import PROBLEMS, get_problem
from powss.sn import theorem2_constants
from powss.solvers import SolverConfig, exact_q_values, qmdp_q_values, select_action

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="powss", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=_positive, default=None, help="worker processes (env POWSS_THREADS)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    problems = sorted(PROBLEMS)
    solvers = ["poss", "powss"]

    p = sub.add_parser("solve", help="plan once from the initial belief")
    p.add_argument("--problem", choices=problems, default="co-tiger")
    p.add_argument("--solver", choices=solvers, required=True)
    p.add_argument("--width", type=_positive, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("sweep", help="root Q-value convergence sweep")
    p.add_argument("--config", help="JSON config file (exclusive with the inline flags)")
    p.add_argument("--problem", choices=problems)
    p.add_argument("--solvers", type=_str_list)
    p.add_argument("--widths", type=_int_list)
    p.add_argument("--runs", type=_positive)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--no-timing", action="store_true", help="write wall_time_s as 0 for byte-reproducible files")

    p = sub.add_parser("closed-loop", help="evaluate the planner with an exact belief filter")
    p.add_argument("--problem", choices=problems, default="co-tiger")
    p.add_argument("--solver", choices=solvers, required=True)
    p.add_argument("--width", type=_positive, required=True)
    p.add_argument("--episodes", type=_positive, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("oracle", help="exact optimal and QMDP root Q-values")
    p.add_argument("--problem", choices=problems, default="co-tiger")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bounds", help="constants guaranteeing epsilon-accurate POWSS estimates")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--rmax", type=float, required=True)
    p.add_argument("--depth", type=_positive, required=True)
    p.add_argument("--actions", type=_positive, required=True)
    p.add_argument("--dinf", type=float, required=True)
    p.add_argument("--json", action="store_true")
    return parser


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def cmd_solve(args) -> str:
    problem = get_problem(args.problem)
    config = SolverConfig.for_problem(problem, args.solver, args.width)
    q = select_action(problem, config, np.random.default_rng(args.seed))
    names = [problem.action_name(a) for a in range(problem.action_count)]
    if args.json:
        return _dump(
            {
                "problem": problem.name,
                "solver": args.solver,
                "width": args.width,
                "seed": args.seed,
                "q": dict(zip(names, q.per_action.tolist())),
                "best_action": names[q.best_action],
                "value": q.value,
            }
        )
    lines = [f"{problem.name} {args.solver} C={args.width} seed={args.seed}"]
    lines += [f"  Q({name}) = {v:.4f}" for name, v in zip(names, q.per_action)]
    lines.append(f"chosen action: {names[q.best_action]}")
    return "\n".join(lines)


def _sweep_config(args, workers: int) -> SweepConfig:
    inline = {
        "problem": args.problem,
        "solvers": args.solvers,
        "widths": args.widths,
        "runs": args.runs,
        "seed": args.seed,
        "output": args.out,
        "format": args.format,
    }
    given = {k: v for k, v in inline.items() if v is not None}
    if args.config:
        if given:
            raise UsageError(f"--config cannot be combined with {sorted('--' + k for k in given)}")
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        if "widths" not in given:
            raise UsageError("sweep needs --config or --widths")
        raw = given
    try:
        return SweepConfig.from_dict(raw, timing=not args.no_timing, workers=workers)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid sweep config: {exc}") from exc


def cmd_sweep(args, workers: int) -> str:
    config = _sweep_config(args, workers)
    rows = run_root_sweep(config)
    if config.output_path:
        return f"wrote {len(rows)} rows to {config.output_path}"
    return format_results(rows, config.format).rstrip("\n")


def cmd_closed_loop(args, workers: int) -> str:
    problem = get_problem(args.problem)
    res = run_closed_loop(problem, args.solver, args.width, args.episodes, args.seed, workers=workers)
    if args.json:
        return _dump({"mean": res.mean, "std": res.std, "episodes": args.episodes})
    return f"{problem.name} {args.solver} C={args.width}: mean return {res.mean:.4f} ± {res.std:.4f} ({args.episodes} episodes)"


def cmd_oracle(args) -> str:
    problem = get_problem(args.problem)
    b0 = problem.initial_belief
    exact = exact_q_values(problem, b0)
    qmdp = qmdp_q_values(problem, b0)
    names = [problem.action_name(a) for a in range(problem.action_count)]
    if args.json:
        return _dump({"exact": dict(zip(names, exact.tolist())), "qmdp": dict(zip(names, qmdp.tolist()))})
    width = max(len(n) for n in names)
    lines = [f"{'action':<{width}}  {'exact':>8}  {'qmdp':>8}"]
    lines += [f"{n:<{width}}  {e:8.4f}  {m:8.4f}" for n, e, m in zip(names, exact, qmdp)]
    return "\n".join(lines)


def cmd_bounds(args) -> str:
    try:
        report = theorem2_constants(args.epsilon, args.gamma, args.rmax, args.depth, args.actions, args.dinf)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.json:
        return _dump(report.as_dict())
    d = report.as_dict()
    alphas = ", ".join(f"{a:.4g}" for a in d.pop("alpha_sequence"))
    lines = [f"{k:>14}: {v:.6g}" if isinstance(v, float) else f"{k:>14}: {v}" for k, v in d.items()]
    lines.append(f"{'alpha[0..D-1]':>14}: {alphas}")
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    workers = args.threads or default_workers()
    try:
        if args.command == "solve":
            out = cmd_solve(args)
        elif args.command == "sweep":
            out = cmd_sweep(args, workers)
        elif args.command == "closed-loop":
            out = cmd_closed_loop(args, workers)
        elif args.command == "oracle":
            out = cmd_oracle(args)
        else:
            out = cmd_bounds(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"powss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PowssError, OSError) as exc:
        print(f"powss: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
