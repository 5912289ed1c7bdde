"""Command-line front end: run, sweep, verify, oracle and replay."""

import argparse
import filecmp
import logging
import sys
import tempfile
from pathlib import Path
from typing import List, Optional

from ..models import BregmanError, ErrorType
from .config import ExperimentConfig, load_config
from .oracles import oracle_suite
from .output import emit_trace_csv, read_trace_csv
from .runner import run_single, run_sweep, write_run, write_sweep
from .verify import SUITES, run_verification

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _parse_axis(text: str, config: ExperimentConfig) -> None:
    """Apply one --axis name=v1,v2,... override to the sweep spec."""
    name, _, values = text.partition("=")
    name = name.strip()
    if name not in ("epsilon", "n", "b", "seeds") or not values:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"--axis: {text}: expected epsilon|n|b|seeds=v1,v2,...")
    cast = float if name == "epsilon" else int
    try:
        parsed = [cast(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"--axis: {text}: values must be numbers") from None
    if not parsed:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"--axis: {text}: sweep axis must not be empty")
    setattr(config.sweep, name, parsed)


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.out:
        config.output_dir = args.out
    result = run_single(config, args.seed)
    seed = config.solver.seed if args.seed is None else args.seed
    stem = f"{config.problem_name}_{config.algorithm.value}_seed{seed}"
    for path in write_run(result, config, stem):
        print(f"wrote {path}")
    status = "ok" if result.success else f"failed ({result.error.value if result.error else 'unknown'})"
    print(f"{config.algorithm.value}: {status}, {len(result.trace)} records, "
          f"{result.trace.total_samples()} samples, stop: {result.trace.stop_reason}")
    if result.message:
        print(result.message)
    return EXIT_OK if result.success else EXIT_FAILED


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    for axis in args.axis or []:
        _parse_axis(axis, config)
    if args.seeds is not None:
        config.sweep.seeds = list(range(args.seeds))
    if args.workers is not None:
        config.sweep.workers = max(1, args.workers)
    if args.out:
        config.output_dir = args.out
    report = run_sweep(config)
    print("epsilon,n,b,avg_samples_to_eps,avg_output_norm_G_sq,success_rate,runs")
    for row in report.rows:
        print(",".join(str(row.get(key)) for key in (
            "epsilon", "n", "b", "avg_samples_to_eps", "avg_output_norm_G_sq", "success_rate", "total_runs",
        )))
    for axis, trend in report.trends.items():
        print(f"trend vs {trend.axis}: slope {trend.slope:.4f}, intercept {trend.intercept:.4f}, R^2 {trend.r_squared:.4f}")
    for path in write_sweep(report, config):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    suites = list(args.suite or [])
    seed = args.seed
    with_oracles = False
    if args.config:
        config = load_config(args.config)
        suites = suites or config.verify_suites
        seed = config.verify_seed if seed is None else seed
        with_oracles = config.verify_oracles
    report = run_verification(suites, seed or 0)
    for result in report.results:
        mark = "PASS" if result.passed else "FAIL"
        print(f"{mark} {result.suite}/{result.name} residual={result.max_residual:.3e} {result.detail}".rstrip())
    print(f"{len(report.results) - len(report.failures())}/{len(report.results)} checks passed")
    passed = report.passed
    if with_oracles:
        passed = _print_oracles(oracle_suite(seed or 0)) and passed
    return EXIT_OK if passed else EXIT_FAILED


def _print_oracles(report) -> bool:
    for result in report.results:
        mark = "PASS" if result.passed else "FAIL"
        print(f"{mark} oracle/{result.name} residual={result.max_residual:.3e} {result.detail}".rstrip())
    return report.passed


def _cmd_oracle(args) -> int:
    return EXIT_OK if _print_oracles(oracle_suite(args.seed)) else EXIT_FAILED


def _cmd_replay(args) -> int:
    rows = read_trace_csv(args.trace)
    print(f"{args.trace}: {len(rows)} records, {rows[-1]['samples'] if rows else 0} samples")
    if not args.config:
        return EXIT_OK
    config = load_config(args.config)
    result = run_single(config, args.seed)
    with tempfile.TemporaryDirectory() as tmp:
        fresh = emit_trace_csv(result.trace, Path(tmp) / "replay.csv", include_iterates=config.csv_iterates)
        identical = filecmp.cmp(fresh, args.trace, shallow=False)
    print("replay identical" if identical else "replay differs")
    return EXIT_OK if identical else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpg-bench", description="Bregman proximal gradient benchmark harness")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one configured experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None, help="output directory")
    run.set_defaults(handler=_cmd_run)

    sweep = sub.add_parser("sweep", help="run a parameter sweep with trend fits")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--axis", action="append", help="name=v1,v2,... for epsilon, n, b or seeds")
    sweep.add_argument("--seeds", type=int, default=None, help="use seeds 0..N-1")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--out", default=None)
    sweep.set_defaults(handler=_cmd_sweep)

    verify = sub.add_parser("verify", help="run property suites")
    verify.add_argument("--suite", action="append", choices=sorted(SUITES))
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--config", default=None)
    verify.set_defaults(handler=_cmd_verify)

    oracle = sub.add_parser("oracle", help="run brute-force oracles")
    oracle.add_argument("--seed", type=int, default=0)
    oracle.set_defaults(handler=_cmd_oracle)

    replay = sub.add_parser("replay", help="summarize a trace CSV, or re-run a config and compare")
    replay.add_argument("--trace", required=True)
    replay.add_argument("--config", default=None)
    replay.add_argument("--seed", type=int, default=None)
    replay.set_defaults(handler=_cmd_replay)
    return parser


def cli_main(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv and run a subcommand.

    Returns:
        0 on success, 1 when a run, check or oracle fails, 2 on a
        configuration error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except BregmanError as exc:
        print(f"error: {exc.message or exc}", file=sys.stderr)
        return EXIT_CONFIG if exc.error_type == ErrorType.CONFIG_ERROR else EXIT_FAILED


def main() -> int:
    return cli_main(sys.argv[1:])
