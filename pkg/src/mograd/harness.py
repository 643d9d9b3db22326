"""Batch experiment runner with deterministic, data-only outputs.

Reproduces the benchmark layouts at any scale: solver comparisons over a
grid of tolerances (iteration-count tables), Pareto-front scans, flow
trajectory sweeps with merit-bound reports, and single-run trace exports.

Determinism contract: given the same :class:`ExperimentConfig` (including
seed), every CSV written is byte-identical, regardless of worker count.
Wall-clock timings therefore never enter a CSV; they are reported in the
JSON summaries, whose ``*_time_s`` entries are the only non-reproducible
fields.  Start points are drawn from a named Philox stream, runs fan out
over a process pool (workers rebuild problems from their registry keys), and
results are ordered by start index before writing.
"""

from __future__ import annotations

import csv
import json
import math
import multiprocessing
import time
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .flow import FlowConfig, attach_merit, mavd_integrate, mavng_integrate, merit_bound_scan
from .merit import MeritConfig
from .problems import InvalidConfig, get_problem
from .solvers import QP_FAILURE, run_solver, trace_csv_rows

_START_STREAM = 104729  # stream index reserved for start-point sampling


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: problem, solver grid, tolerance sweep, flow sweep.

    ``solvers`` are templates; ``epsilons`` is crossed with them at run time.
    The flow fields are only consulted by :func:`flow_experiment`.
    """

    problem: str
    solvers: tuple = ()
    epsilons: tuple = (1e-6,)
    n_starts: int = 10
    seed: int = 0
    workers: int = 1
    write_traces: bool = False
    merit_stride: int = 10
    flow_alphas: tuple = ()
    flow_beta: float = 3.0
    flow_p: float = 1.0
    flow_t0: float = 1.0
    flow_h: float = 1e-3
    flow_t_end: float = 20.0
    flow_x0: tuple = ()
    bound_coeff_scale: float = 1.0

    def __post_init__(self):
        if self.n_starts < 1:
            raise InvalidConfig("n_starts must be at least 1")
        if self.workers < 1:
            raise InvalidConfig("workers must be at least 1")
        if self.merit_stride < 1:
            raise InvalidConfig("merit_stride must be at least 1")
        object.__setattr__(self, "solvers", tuple(self.solvers))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "flow_alphas", tuple(float(a) for a in self.flow_alphas))
        object.__setattr__(self, "flow_x0", tuple(float(v) for v in self.flow_x0))


@dataclass(frozen=True)
class RunRecord:
    solver: str
    epsilon: float
    start_index: int
    iterations: int
    termination: str
    final_kkt: float
    wall_time: float


@dataclass(frozen=True)
class CellSummary:
    """One (solver, epsilon) aggregate row of the comparison table."""

    problem: str
    solver: str
    epsilon: float
    starts: int
    converged: int
    total_iterations: int
    total_time_s: float


@dataclass
class BatchSummary:
    config: ExperimentConfig
    cells: list
    runs: list
    failures: int

    def total_iterations(self, solver, epsilon=None):
        return sum(
            c.total_iterations
            for c in self.cells
            if c.solver == solver and (epsilon is None or c.epsilon == epsilon)
        )


def sample_starts(prob, n_starts, seed):
    """Seeded uniform start points from the problem's sampling box."""
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(_START_STREAM,)))
    )
    lo, hi = prob.init_box
    return rng.uniform(lo, hi, size=(n_starts, prob.n))


# ---------------------------------------------------------------------------
# deterministic file output


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    return "" if math.isnan(v) else repr(v)


def write_csv(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _config_echo(cfg):
    echo = asdict(cfg)
    echo["solvers"] = [asdict(s) for s in cfg.solvers]
    return echo


# ---------------------------------------------------------------------------
# worker-side execution (problems are rebuilt per process from their key)


@lru_cache(maxsize=16)
def _worker_problem(key):
    return get_problem(key)


def _run_one(task):
    problem_key, solver_cfg, epsilon, start_index, x0 = task
    prob = _worker_problem(problem_key)
    cfg = replace(solver_cfg, epsilon=epsilon)
    t0 = time.perf_counter()
    trace = run_solver(prob, cfg, np.asarray(x0))
    wall = time.perf_counter() - t0
    record = RunRecord(
        solver=cfg.variant,
        epsilon=epsilon,
        start_index=start_index,
        iterations=trace.iterations,
        termination=trace.termination,
        final_kkt=trace.final_residual,
        wall_time=wall,
    )
    final_f = tuple(float(v) for v in prob.objectives(trace.x_final))
    return record, final_f, trace if _KEEP_TRACES else None


_KEEP_TRACES = False


def _map_tasks(tasks, workers):
    if workers <= 1:
        return [_run_one(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(processes=workers) as pool:
        return pool.map(_run_one, tasks)


def run_batch(cfg, out_dir=None):
    """Run every (solver, epsilon, start) cell and write the summary tables.

    Writes ``summary.csv`` (per-cell totals), ``runs.csv`` (one row per
    start, none dropped: failed runs keep their termination status), and
    ``summary.json`` (config echo plus wall times).  Optionally writes one
    trace CSV per run.
    """
    if not cfg.solvers:
        raise InvalidConfig("run_batch needs at least one solver")
    prob = get_problem(cfg.problem)
    starts = sample_starts(prob, cfg.n_starts, cfg.seed)

    global _KEEP_TRACES
    _KEEP_TRACES = cfg.write_traces

    tasks = []
    for solver_cfg in cfg.solvers:
        for eps in cfg.epsilons:
            for idx in range(cfg.n_starts):
                tasks.append((cfg.problem, solver_cfg, eps, idx, tuple(starts[idx])))
    results = _map_tasks(tasks, cfg.workers)
    _KEEP_TRACES = False

    runs = [record for record, _, _ in results]
    cells = []
    failures = 0
    pos = 0
    for solver_cfg in cfg.solvers:
        for eps in cfg.epsilons:
            chunk = runs[pos : pos + cfg.n_starts]
            pos += cfg.n_starts
            cells.append(
                CellSummary(
                    problem=cfg.problem,
                    solver=solver_cfg.variant,
                    epsilon=eps,
                    starts=cfg.n_starts,
                    converged=sum(r.termination == "converged" for r in chunk),
                    total_iterations=sum(r.iterations for r in chunk),
                    total_time_s=sum(r.wall_time for r in chunk),
                )
            )
            failures += sum(r.termination == QP_FAILURE for r in chunk)

    summary = BatchSummary(config=cfg, cells=cells, runs=runs, failures=failures)
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(
            out / "summary.csv",
            [["problem", "solver", "epsilon", "starts", "converged", "total_iterations"]]
            + [
                [c.problem, c.solver, c.epsilon, c.starts, c.converged, c.total_iterations]
                for c in cells
            ],
        )
        write_csv(
            out / "runs.csv",
            [
                [
                    "problem",
                    "solver",
                    "epsilon",
                    "start_index",
                    "iterations",
                    "termination",
                    "final_kkt",
                ]
            ]
            + [
                [cfg.problem, r.solver, r.epsilon, r.start_index, r.iterations, r.termination, r.final_kkt]
                for r in runs
            ],
        )
        write_json(
            out / "summary.json",
            {
                "config": _config_echo(cfg),
                "cells": [asdict(c) for c in cells],
                "failures": failures,
            },
        )
        if cfg.write_traces:
            for (record, _, trace) in results:
                if trace is None:
                    continue
                name = f"trace_{record.solver}_eps{record.epsilon:g}_start{record.start_index}.csv"
                write_csv(out / name, trace_csv_rows(trace, prob.m))
    return summary


def pareto_scan(cfg, out_dir=None):
    """Run the first configured solver from every start and emit the front.

    ``front.csv`` holds one row per start with the final objective vector and
    KKT residual; non-converged points are flagged, never dropped.
    """
    if not cfg.solvers:
        raise InvalidConfig("pareto_scan needs a solver")
    prob = get_problem(cfg.problem)
    starts = sample_starts(prob, cfg.n_starts, cfg.seed)
    eps = cfg.epsilons[0]
    solver_cfg = cfg.solvers[0]
    tasks = [
        (cfg.problem, solver_cfg, eps, idx, tuple(starts[idx]))
        for idx in range(cfg.n_starts)
    ]
    results = _map_tasks(tasks, cfg.workers)

    header = (
        ["start_index"]
        + [f"f{i + 1}" for i in range(prob.m)]
        + ["kkt_residual", "converged"]
    )
    rows = [header]
    failures = 0
    points = []
    for record, final_f, _ in results:
        rows.append(
            [record.start_index]
            + list(final_f)
            + [record.final_kkt, record.termination == "converged"]
        )
        failures += record.termination == QP_FAILURE
        points.append((final_f, record.final_kkt, record.termination))
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(out / "front.csv", rows)
        write_json(
            out / "front.json",
            {"config": _config_echo(cfg), "failures": failures},
        )
    return points, failures


def flow_experiment(cfg, out_dir=None, merit_cfg=None):
    """Integrate both flows for each alpha in the sweep and scan the bound.

    Writes one trajectory CSV per (system, alpha) with columns
    t, x_1..x_n, kkt_residual, merit (blank off the sampling stride), plus a
    JSON bound report with the per-trajectory fractions.
    """
    if not cfg.flow_alphas:
        raise InvalidConfig("flow_experiment needs a non-empty alpha sweep")
    prob = get_problem(cfg.problem)
    if cfg.flow_x0:
        x0 = np.asarray(cfg.flow_x0, dtype=float)
        if x0.shape != (prob.n,):
            raise InvalidConfig(f"flow x0 must have dimension {prob.n}")
    else:
        lo, hi = prob.init_box
        x0 = 0.5 * (lo + hi)

    report = []
    failures = 0
    merit_cfg = merit_cfg or MeritConfig()
    for alpha in cfg.flow_alphas:
        flow_cfg = FlowConfig(
            alpha=alpha,
            x0=x0,
            beta=cfg.flow_beta,
            p=cfg.flow_p,
            t0=cfg.flow_t0,
            h=cfg.flow_h,
            t_end=cfg.flow_t_end,
        )
        for system, integrate in (("mavng", mavng_integrate), ("mavd", mavd_integrate)):
            traj = integrate(prob, flow_cfg)
            failures += traj.termination != "completed"
            attach_merit(prob, traj, stride=cfg.merit_stride, cfg=merit_cfg)
            coeff = cfg.bound_coeff_scale * alpha
            scan = merit_bound_scan(traj, coeff)
            report.append(
                {
                    "system": system,
                    "alpha": alpha,
                    "coeff": coeff,
                    "fraction": scan.fraction,
                    "samples": len(scan.samples),
                    "termination": traj.termination,
                }
            )
            if out_dir is not None:
                header = (
                    ["t"]
                    + [f"x{i + 1}" for i in range(prob.n)]
                    + ["kkt_residual", "merit"]
                )
                rows = [header]
                for i in range(len(traj)):
                    rows.append(
                        [traj.times[i]]
                        + list(traj.points[i])
                        + [traj.kkt_residuals[i], traj.merit[i]]
                    )
                write_csv(Path(out_dir) / f"{system}_a{alpha:g}.csv", rows)
    if out_dir is not None:
        write_json(
            Path(out_dir) / "bound_report.json",
            {"config": _config_echo(cfg), "trajectories": report, "failures": failures},
        )
    return report, failures


def run_trace(cfg, out_dir=None, x0=None):
    """Single run with full tracing; exports the per-iteration CSV."""
    if not cfg.solvers:
        raise InvalidConfig("trace needs a solver")
    prob = get_problem(cfg.problem)
    if x0 is None:
        x0 = sample_starts(prob, 1, cfg.seed)[0]
    else:
        x0 = np.asarray(x0, dtype=float)
    solver_cfg = replace(cfg.solvers[0], epsilon=cfg.epsilons[0])
    trace = run_solver(prob, solver_cfg, x0)
    if out_dir is not None:
        out = Path(out_dir)
        write_csv(out / "trace.csv", trace_csv_rows(trace, prob.m))
        write_json(
            out / "trace.json",
            {
                "config": _config_echo(cfg),
                "termination": trace.termination,
                "iterations": trace.iterations,
                "final_kkt": trace.final_residual,
                "x0": [float(v) for v in x0],
                "x_final": [float(v) for v in trace.x_final],
            },
        )
    return trace
