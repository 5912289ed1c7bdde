"""Experiment configuration loaded from TOML files."""

import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..kernels import KernelModel
from ..models import Algorithm, BregmanError, ErrorType, KernelKind, OutputSelection, SolverConfig
from ..problems import PROBLEM_BUILDERS, Problem, make_problem

logger = logging.getLogger(__name__)

OUT_DIR_ENV = "BPG_OUT_DIR"
AUTO = "auto"

# Keys accepted per table; [problem] also passes any builder parameter through.
SOLVER_KEYS = {
    "algorithm", "epsilon", "lambda", "eta", "gamma", "tau", "b", "epochs", "q",
    "max_total_samples", "max_iter", "seed", "output_selection", "psi_lower_bound",
    "record_mappings", "x0",
}
AUTO_KEYS = {"lambda", "eta", "gamma", "tau", "b", "epochs"}
KERNEL_KEYS = {"kind", "r"}
SWEEP_KEYS = {"epsilon", "n", "b", "seeds", "workers"}
OUTPUT_KEYS = {"directory", "json", "csv", "iterates"}
VERIFY_KEYS = {"suites", "oracles", "seed"}
TABLES = {"problem", "kernel", "solver", "sweep", "output", "verify"}


@dataclass
class KernelSpec:
    """Kernel named in a config; kind None means the problem's own kernel."""
    kind: Optional[KernelKind] = None
    r: int = 0

    def build(self, problem: Problem) -> KernelModel:
        if self.kind is None:
            return problem.kernel
        if self.kind == KernelKind.QUADRATIC:
            return KernelModel.quadratic()
        if self.kind == KernelKind.POLYNOMIAL:
            return KernelModel.polynomial(self.r)
        return KernelModel.monomial(self.r)


@dataclass
class SweepSpec:
    """Sweep axes; an empty list leaves that axis at the base value."""
    epsilon: List[float] = field(default_factory=list)
    n: List[int] = field(default_factory=list)
    b: List[int] = field(default_factory=list)
    seeds: List[int] = field(default_factory=list)
    workers: int = 1


@dataclass
class ExperimentConfig:
    """Everything one harness invocation needs to build and run experiments."""
    problem_name: str
    problem_params: Dict[str, Any] = field(default_factory=dict)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    algorithm: Algorithm = Algorithm.BPG
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output_dir: str = "out"
    write_json: bool = True
    write_csv: bool = True
    csv_iterates: bool = False
    verify_suites: List[str] = field(default_factory=list)
    verify_oracles: bool = False
    verify_seed: int = 0
    source: str = "<memory>"

    def build_problem(self, **overrides) -> Problem:
        """Problem instance with optional parameter overrides (sweep points)."""
        params = {**self.problem_params, **overrides}
        try:
            return make_problem(self.problem_name, **params)
        except BregmanError as exc:
            if exc.error_type != ErrorType.CONFIG_ERROR:
                raise
            raise _fail(self.source, "problem", exc.message) from exc

    def build_kernel(self, problem: Problem) -> KernelModel:
        return self.kernel.build(problem)

    def with_solver(self, **changes) -> "ExperimentConfig":
        """Copy with SolverConfig fields replaced."""
        return replace(self, solver=replace(self.solver, **changes))


def _fail(source: str, key: str, reason: str) -> BregmanError:
    return BregmanError(ErrorType.CONFIG_ERROR, f"{source}: {key}: {reason}")


def _table(data: Dict[str, Any], name: str, source: str) -> Dict[str, Any]:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise _fail(source, name, "expected a table")
    return value


def _check_keys(table: Dict[str, Any], allowed: set, prefix: str, source: str) -> None:
    for key in table:
        if key not in allowed:
            raise _fail(source, f"{prefix}.{key}", "unknown key")


def _number(value: Any, key: str, source: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(source, key, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise _fail(source, key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _number_list(value: Any, key: str, source: str, integer: bool = False) -> list:
    if not isinstance(value, list):
        raise _fail(source, key, "expected a list")
    if not value:
        raise _fail(source, key, "sweep axis must not be empty")
    return [_number(v, key, source, integer) for v in value]


def _parse_solver(table: Dict[str, Any], source: str) -> Dict[str, Any]:
    _check_keys(table, SOLVER_KEYS, "solver", source)
    fields: Dict[str, Any] = {}
    for key, value in table.items():
        dotted = f"solver.{key}"
        if key == "algorithm":
            continue
        if key in AUTO_KEYS and value == AUTO:
            value = None
        elif key in ("tau", "b", "epochs", "max_total_samples", "max_iter", "seed"):
            value = _number(value, dotted, source, integer=True)
        elif key in ("lambda", "eta", "gamma", "epsilon", "q", "psi_lower_bound"):
            value = _number(value, dotted, source)
        elif key == "output_selection":
            try:
                value = OutputSelection(value)
            except ValueError:
                raise _fail(source, dotted, f"expected one of {[o.value for o in OutputSelection]}") from None
        elif key == "record_mappings":
            if not isinstance(value, bool):
                raise _fail(source, dotted, "expected true or false")
        elif key == "x0":
            value = _number_list(value, dotted, source)
        fields["lam" if key == "lambda" else key] = value
    return fields


def parse_config(data: Dict[str, Any], source: str = "<memory>") -> ExperimentConfig:
    """
    Build an ExperimentConfig from parsed TOML data.

    Args:
        data: Parsed TOML document
        source: File name used in error messages

    Returns:
        Validated ExperimentConfig

    Raises:
        BregmanError: CONFIG_ERROR naming the source and the dotted key
    """
    for name in data:
        if name not in TABLES:
            raise _fail(source, name, "unknown table")

    problem = dict(_table(data, "problem", source))
    name = problem.pop("name", None)
    if name is None:
        raise _fail(source, "problem.name", "missing")
    if name not in PROBLEM_BUILDERS:
        raise _fail(source, "problem.name", f"unknown problem '{name}', expected one of {sorted(PROBLEM_BUILDERS)}")

    kernel_table = _table(data, "kernel", source)
    _check_keys(kernel_table, KERNEL_KEYS, "kernel", source)
    kernel = KernelSpec()
    if "kind" in kernel_table:
        try:
            kernel.kind = KernelKind(kernel_table["kind"])
        except ValueError:
            raise _fail(source, "kernel.kind", f"expected one of {[k.value for k in KernelKind]}") from None
        kernel.r = _number(kernel_table.get("r", 0), "kernel.r", source, integer=True)

    solver_table = _table(data, "solver", source)
    fields = _parse_solver(solver_table, source)
    try:
        algorithm = Algorithm(solver_table.get("algorithm", Algorithm.BPG.value))
    except ValueError:
        raise _fail(source, "solver.algorithm", f"expected one of {[a.value for a in Algorithm]}") from None
    try:
        solver = SolverConfig(**fields)
    except BregmanError as exc:
        raise _fail(source, "solver", exc.message) from exc

    sweep_table = _table(data, "sweep", source)
    _check_keys(sweep_table, SWEEP_KEYS, "sweep", source)
    sweep = SweepSpec()
    if "epsilon" in sweep_table:
        sweep.epsilon = _number_list(sweep_table["epsilon"], "sweep.epsilon", source)
    for axis in ("n", "b", "seeds"):
        if axis in sweep_table:
            setattr(sweep, axis, _number_list(sweep_table[axis], f"sweep.{axis}", source, integer=True))
    if "workers" in sweep_table:
        sweep.workers = _number(sweep_table["workers"], "sweep.workers", source, integer=True)
        if sweep.workers < 1:
            raise _fail(source, "sweep.workers", "must be at least 1")

    output = _table(data, "output", source)
    _check_keys(output, OUTPUT_KEYS, "output", source)
    verify = _table(data, "verify", source)
    _check_keys(verify, VERIFY_KEYS, "verify", source)
    suites = verify.get("suites", [])
    if not isinstance(suites, list) or not all(isinstance(s, str) for s in suites):
        raise _fail(source, "verify.suites", "expected a list of suite names")

    out_dir = os.environ.get(OUT_DIR_ENV) or output.get("directory", "out")
    if os.environ.get(OUT_DIR_ENV):
        logger.info("output directory overridden by %s=%s", OUT_DIR_ENV, out_dir)

    return ExperimentConfig(
        problem_name=name,
        problem_params=problem,
        kernel=kernel,
        algorithm=algorithm,
        solver=solver,
        sweep=sweep,
        output_dir=str(out_dir),
        write_json=bool(output.get("json", True)),
        write_csv=bool(output.get("csv", True)),
        csv_iterates=bool(output.get("iterates", False)),
        verify_suites=list(suites),
        verify_oracles=bool(verify.get("oracles", False)),
        verify_seed=_number(verify.get("seed", 0), "verify.seed", source, integer=True),
        source=source,
    )


def load_config(path) -> ExperimentConfig:
    """Read and validate a TOML experiment file."""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise _fail(str(path), "<file>", "not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise _fail(str(path), "<file>", f"invalid TOML: {exc}") from exc
    config = parse_config(data, str(path))
    logger.debug("loaded %s: %s with %s", path, config.problem_name, config.algorithm.value)
    return config
