"""Experiment execution: single runs, seed ensembles and parameter sweeps."""

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..models import BregmanError
from ..solvers import run_solver
from ..trace_collector import EnsembleCollector, RunResult, RunSummary, summarize_run
from .config import ExperimentConfig
from .output import emit_trace_csv, run_report, write_json, write_table_csv
from .trends import TrendFit, fit_trend

logger = logging.getLogger(__name__)


def run_single(config: ExperimentConfig, seed: Optional[int] = None, **problem_overrides) -> RunResult:
    """
    Build the problem and kernel from config and run its algorithm once.

    Args:
        config: Experiment configuration
        seed: Run seed replacing config.solver.seed
        **problem_overrides: Problem parameters replacing the configured ones

    Returns:
        RunResult of the solver

    Raises:
        BregmanError: pre-run validation failures (config, budget, kernel)
    """
    problem = config.build_problem(**problem_overrides)
    kernel = config.build_kernel(problem)
    solver_config = config.solver if seed is None else config.with_solver(seed=seed).solver
    result = run_solver(config.algorithm, problem, kernel, solver_config)
    logger.info(
        "%s on %s (seed %d): success=%s, %d records, %d samples",
        config.algorithm.value, problem.name, solver_config.seed, result.success,
        len(result.trace), result.trace.total_samples(),
    )
    return result


def write_run(result: RunResult, config: ExperimentConfig, stem: str) -> List[Path]:
    """Trace CSV and JSON report under the output directory."""
    out = Path(config.output_dir)
    written = []
    if config.write_csv:
        written.append(emit_trace_csv(result.trace, out / f"{stem}.csv", include_iterates=config.csv_iterates))
    if config.write_json:
        written.append(write_json(run_report(result), out / f"{stem}.json"))
    return written


def run_ensemble(config: ExperimentConfig, seeds: List[int], **problem_overrides) -> EnsembleCollector:
    """Run the configured algorithm once per seed and collect the summaries."""
    collector = EnsembleCollector()
    for seed in seeds:
        result = run_single(config, seed, **problem_overrides)
        collector.save_to_history(summarize_run(seed, result))
    return collector


@dataclass(frozen=True)
class SweepPoint:
    """One grid point of a sweep: axis overrides plus the seed."""
    epsilon: Optional[float]
    n: Optional[int]
    b: Optional[int]
    seed: int


def sweep_points(config: ExperimentConfig) -> List[SweepPoint]:
    """Cartesian product of the configured axes; empty axes stay at the base value."""
    sweep = config.sweep
    seeds = sweep.seeds or [config.solver.seed]
    grid = itertools.product(sweep.epsilon or [None], sweep.n or [None], sweep.b or [None], seeds)
    return [SweepPoint(eps, n, b, seed) for eps, n, b, seed in grid]


def _run_point(args: Tuple[ExperimentConfig, SweepPoint]) -> Tuple[SweepPoint, RunSummary]:
    """Worker body; rebuilds the problem from the config so nothing numerical crosses processes."""
    config, point = args
    changes: Dict[str, Any] = {}
    if point.epsilon is not None:
        changes["epsilon"] = point.epsilon
    if point.b is not None:
        changes["b"] = point.b
    local = config.with_solver(**changes) if changes else config
    overrides = {} if point.n is None else {"n": point.n}
    try:
        result = run_single(local, point.seed, **overrides)
    except BregmanError as exc:
        logger.warning("sweep point %s failed before running: %s", point, exc)
        return point, RunSummary(seed=point.seed, success=False, samples=0, steps=0, epochs=0)
    return point, summarize_run(point.seed, result)


@dataclass
class SweepReport:
    """Averaged metrics per grid point, the per-run summaries and the log-log trends along each swept axis."""
    rows: List[Dict[str, Any]] = field(default_factory=list)
    trends: Dict[str, TrendFit] = field(default_factory=dict)
    runs: List[Dict[str, Any]] = field(default_factory=list)


def _trend_along(rows: List[Dict[str, Any]], axis: str, metric: str) -> Optional[TrendFit]:
    transform = (lambda v: 1.0 / v) if axis == "epsilon" else float
    points = [(transform(row[axis]), row[metric]) for row in rows if row.get(metric)]
    if len({p[0] for p in points}) < 3:
        return None
    try:
        return fit_trend(points, axis="1/epsilon" if axis == "epsilon" else axis)
    except BregmanError as exc:
        logger.warning("no trend along %s: %s", axis, exc)
        return None


def run_sweep(config: ExperimentConfig, metric: str = "avg_samples_to_eps") -> SweepReport:
    """
    Run every sweep point, averaging over seeds.

    Points fan out over a process pool of config.sweep.workers; each worker
    owns its problem, random stream and trace. Aggregation happens here in
    point order.
    """
    points = sweep_points(config)
    tasks = [(config, point) for point in points]
    logger.info("sweep: %d runs on %d workers", len(tasks), config.sweep.workers)
    if config.sweep.workers > 1:
        with ProcessPoolExecutor(max_workers=config.sweep.workers) as pool:
            outcomes = list(pool.map(_run_point, tasks))
    else:
        outcomes = [_run_point(task) for task in tasks]

    groups: Dict[Tuple, EnsembleCollector] = {}
    for point, summary in outcomes:
        key = (point.epsilon, point.n, point.b)
        groups.setdefault(key, EnsembleCollector()).save_to_history(summary)

    report = SweepReport()
    for (eps, n, b), collector in groups.items():
        row: Dict[str, Any] = {
            "epsilon": eps if eps is not None else config.solver.epsilon,
            "n": n if n is not None else config.problem_params.get("n"),
            "b": b if b is not None else config.solver.b,
        }
        row.update(collector.get_average_metrics())
        report.rows.append(row)
        report.runs.extend({**{axis: row[axis] for axis in ("epsilon", "n", "b")}, **asdict(summary)}
                           for summary in collector.get_history())

    for axis in ("epsilon", "n", "b"):
        if len(getattr(config.sweep, axis)) >= 3:
            others = [a for a in ("epsilon", "n", "b") if a != axis]
            # slice through the first row
            base = report.rows[0]
            line = [row for row in report.rows if all(row[o] == base[o] for o in others)]
            trend = _trend_along(line, axis, metric)
            if trend is not None:
                report.trends[axis] = trend
                logger.info("trend along %s: slope %.3f (R^2 %.3f)", trend.axis, trend.slope, trend.r_squared)
    return report


def write_sweep(report: SweepReport, config: ExperimentConfig, stem: str = "sweep") -> List[Path]:
    out = Path(config.output_dir)
    written = [write_table_csv(report.rows, out / f"{stem}.csv")]
    if config.write_json:
        written.append(write_json({"rows": report.rows, "trends": report.trends, "runs": report.runs}, out / f"{stem}.json"))
    return written
