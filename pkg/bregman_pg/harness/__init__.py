"""Benchmark harness: configuration, runs, sweeps, output files and verification."""

from .config import ExperimentConfig, load_config, parse_config
from .oracles import oracle_suite
from .output import emit_trace_csv, read_trace_csv, write_json
from .runner import run_ensemble, run_single, run_sweep
from .trends import TrendFit, fit_trend
from .verify import run_verification

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "oracle_suite",
    "emit_trace_csv",
    "read_trace_csv",
    "write_json",
    "run_single",
    "run_ensemble",
    "run_sweep",
    "TrendFit",
    "fit_trend",
    "run_verification",
]
