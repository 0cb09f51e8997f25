"""Experiment runners: root-value convergence sweeps and closed-loop evaluation.

Every run owns its random stream. The seed depends only on the run's position
in the experiment grid, so cells can be added, reordered or executed in
parallel without changing any other cell's numbers.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from powss.core import ProblemDefinition, exact_bayes_update, particles_from_belief
from powss.problems import get_problem
from powss.solvers import SolverConfig, SolverKind, select_action

log = logging.getLogger(__name__)

CSV_COLUMNS = ("solver", "width", "action", "q_mean", "q_std", "select_rate", "runs", "wall_time_s")
SEED_MODULUS = 2**64


@dataclass(frozen=True)
class SweepConfig:
    problem_name: str = "co-tiger"
    solver_kinds: tuple = (SolverKind.POSS, SolverKind.POWSS)
    widths: tuple = (1, 5, 10, 20, 40)
    runs_per_cell: int = 200
    base_seed: int = 0
    output_path: Optional[str] = None
    format: str = "csv"
    timing: bool = True
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "solver_kinds", tuple(SolverKind(k) for k in self.solver_kinds))
        object.__setattr__(self, "widths", tuple(int(c) for c in self.widths))
        if not self.widths:
            raise ValueError("widths must be nonempty")
        if any(c < 1 for c in self.widths) or any(b <= a for a, b in zip(self.widths, self.widths[1:])):
            raise ValueError(f"widths must be positive and strictly increasing: {self.widths}")
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be at least 1")
        if not 0 <= self.base_seed < SEED_MODULUS:
            raise ValueError("base_seed must be an unsigned 64-bit integer")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")

    @classmethod
    def from_dict(cls, raw: dict, **overrides) -> SweepConfig:
        """Build from the JSON config schema ``{problem, solvers, widths, runs, seed, output, format}``."""
        known = {"problem", "solvers", "widths", "runs", "seed", "episodes", "output", "format"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(
            problem_name=raw.get("problem", "co-tiger"),
            solver_kinds=tuple(raw.get("solvers", ("poss", "powss"))),
            widths=tuple(raw["widths"]),
            runs_per_cell=int(raw.get("runs", 200)),
            base_seed=int(raw.get("seed", 0)),
            output_path=raw.get("output"),
            format=raw.get("format", "csv"),
        )
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True)
class RunRecord:
    solver: SolverKind
    width: int
    seed: int
    per_action_q: tuple
    chosen_action: int
    wall_time: float


@dataclass(frozen=True)
class SweepRow:
    solver: str
    width: int
    action: str
    q_mean: float
    q_std: float
    select_rate: float
    runs: int
    wall_time_s: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}


def stable_hash(solver, width: int) -> int:
    digest = hashlib.blake2b(f"{SolverKind(solver).value}:{int(width)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def run_seed(base_seed: int, solver, width: int, run_index: int) -> int:
    return ((base_seed ^ stable_hash(solver, width)) + run_index) % SEED_MODULUS


def _resolve(problem: Union[str, ProblemDefinition]) -> ProblemDefinition:
    return get_problem(problem) if isinstance(problem, str) else problem


def plan_once(problem, solver, width: int, seed: int) -> RunRecord:
    problem = _resolve(problem)
    config = SolverConfig.for_problem(problem, solver, width)
    start = time.perf_counter()
    q = select_action(problem, config, np.random.default_rng(seed))
    elapsed = time.perf_counter() - start
    return RunRecord(config.solver_kind, width, seed, tuple(q.per_action.tolist()), q.best_action, elapsed)


def _plan_many(args):
    problem, jobs = args
    return [plan_once(problem, solver, width, seed) for solver, width, seed in jobs]


def _fan_out(problem, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) < 2:
        return _plan_many((problem, jobs))
    chunks = [jobs[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_plan_many, [(problem, c) for c in chunks if c])
    return [rec for part in parts for rec in part]


def _std(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if x.shape[0] > 1 else 0.0


def aggregate(records: Sequence[RunRecord], problem: ProblemDefinition, timing: bool = True) -> list[SweepRow]:
    """Per-cell, per-action mean, unbiased std and selection frequency.

    Records are sorted by ``(solver, width, seed)`` first so the result does not
    depend on execution order.
    """
    records = sorted(records, key=lambda r: (r.solver.value, r.width, r.seed))
    cells: dict = {}
    for rec in records:
        cells.setdefault((rec.solver.value, rec.width), []).append(rec)
    rows = []
    for (solver, width), recs in sorted(cells.items()):
        q = np.array([r.per_action_q for r in recs])
        chosen = np.array([r.chosen_action for r in recs])
        wall = float(np.mean([r.wall_time for r in recs])) if timing else 0.0
        for a in range(problem.action_count):
            rows.append(
                SweepRow(
                    solver=solver,
                    width=width,
                    action=problem.action_name(a),
                    q_mean=float(q[:, a].mean()),
                    q_std=_std(q[:, a]),
                    select_rate=float(np.mean(chosen == a)),
                    runs=len(recs),
                    wall_time_s=wall,
                )
            )
    return rows


def run_root_sweep_records(config: SweepConfig) -> list[RunRecord]:
    jobs = [
        (kind, width, run_seed(config.base_seed, kind, width, i))
        for kind in config.solver_kinds
        for width in config.widths
        for i in range(config.runs_per_cell)
    ]
    log.info("sweep %s: %d runs", config.problem_name, len(jobs))
    return _fan_out(config.problem_name, jobs, config.workers)


def run_root_sweep(config: SweepConfig) -> list[SweepRow]:
    """Run every (solver, width) cell of the sweep and return aggregated rows.

    Writes the rows to ``config.output_path`` when one is set.
    """
    problem = get_problem(config.problem_name)
    rows = aggregate(run_root_sweep_records(config), problem, timing=config.timing)
    if config.output_path:
        write_results(rows, config.output_path, config.format)
    return rows


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def format_results(rows: Sequence[SweepRow], fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, k)) for k in CSV_COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([row.as_dict() for row in rows], indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def write_results(rows: Sequence[SweepRow], path, fmt: str = "csv") -> None:
    text = format_results(rows, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_results_csv(path) -> list[SweepRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            SweepRow(
                solver=r["solver"],
                width=int(r["width"]),
                action=r["action"],
                q_mean=float(r["q_mean"]),
                q_std=float(r["q_std"]),
                select_rate=float(r["select_rate"]),
                runs=int(r["runs"]),
                wall_time_s=float(r["wall_time_s"]),
            )
            for r in csv.DictReader(fh)
        ]


@dataclass(frozen=True)
class ClosedLoopResult:
    mean: float
    std: float
    returns: np.ndarray = field(repr=False)

    @property
    def stderr(self) -> float:
        n = self.returns.shape[0]
        return self.std / math.sqrt(n) if n > 1 else 0.0


def run_episode(problem, solver, width: int, seed: int, horizon: Optional[int] = None) -> float:
    """One observe-plan-act episode with an exact belief filter; returns the discounted return.

    At step ``t`` the planner looks ``horizon - t`` steps ahead from ``width``
    particles drawn from the current exact belief.
    """
    problem = _resolve(problem)
    if problem.initial_belief is None:
        raise ValueError(f"{problem.name} does not support exact filtering")
    horizon = problem.horizon if horizon is None else horizon
    rng = np.random.default_rng(seed)
    belief = problem.initial_belief
    state = rng.choice(belief.shape[0], p=belief)
    total = 0.0
    for t in range(horizon):
        config = SolverConfig.for_problem(problem, solver, width, horizon=horizon - t)
        particles = particles_from_belief(belief, width, rng)
        action = select_action(problem, config, rng, particles=particles).best_action
        out = problem.generative(state, action, rng)
        total += problem.discount**t * out.reward
        belief = exact_bayes_update(problem, belief, action, out.observation)
        state = out.next_state
        if out.terminal:
            break
    return total


def _episodes(args):
    problem, solver, width, seeds, horizon = args
    return [run_episode(problem, solver, width, s, horizon) for s in seeds]


def run_closed_loop(
    problem,
    solver_kind,
    width: int,
    episodes: int,
    base_seed: int = 0,
    horizon: Optional[int] = None,
    workers: int = 1,
) -> ClosedLoopResult:
    """Mean and unbiased std of the discounted return over ``episodes`` episodes.

    Episode ``i`` uses seed ``base_seed + i``.
    """
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    seeds = [(base_seed + i) % SEED_MODULUS for i in range(episodes)]
    if workers > 1:
        chunks = [seeds[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_episodes, [(problem, solver_kind, width, c, horizon) for c in chunks]))
        by_seed = {s: r for chunk, part in zip(chunks, parts) for s, r in zip(chunk, part)}
        returns = np.array([by_seed[s] for s in seeds])
    else:
        returns = np.array(_episodes((problem, solver_kind, width, seeds, horizon)))
    return ClosedLoopResult(float(returns.mean()), _std(returns), returns)


def default_workers() -> int:
    env = os.environ.get("POWSS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
