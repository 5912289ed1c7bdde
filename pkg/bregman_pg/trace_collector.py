"""Per-iteration trace recording and seed-ensemble history for solver runs."""

from dataclasses import dataclass, field
from time import perf_counter
from typing import Any, Dict, List, Optional

import numpy as np

from .models import Ball, ErrorType, EventCensus


@dataclass
class IterRecord:
    """Record of a single iterate for trace output."""
    iter: int
    s: int
    k: int
    x: np.ndarray
    psi: float
    step: float
    samples: int
    norm_G: Optional[float] = None
    norm_D: Optional[float] = None
    norm_restricted_G: Optional[float] = None
    norm_D_surrogate: Optional[float] = None
    norm_E: Optional[float] = None
    dist_boundary: Optional[float] = None
    hit_boundary: bool = False
    prox_on_boundary: bool = False
    estimator_full_batch: bool = False
    eligible: bool = True  # delta/4 away from the epoch boundary


@dataclass
class Trace:
    """Ordered iterate records plus the resolved run parameters."""
    records: List[IterRecord] = field(default_factory=list)
    params: Dict[str, Any] = field(default_factory=dict)
    epoch_balls: Dict[int, Ball] = field(default_factory=dict)
    epoch_lengths: Dict[int, int] = field(default_factory=dict)
    stop_reason: str = ""
    wall_time: float = 0.0

    def __len__(self) -> int:
        return len(self.records)

    def iterates(self) -> np.ndarray:
        """Stacked iterates, one per row."""
        return np.array([rec.x for rec in self.records])

    def column(self, name: str) -> List[Any]:
        """Values of one record attribute across the trace."""
        return [getattr(rec, name) for rec in self.records]

    def last(self) -> Optional[IterRecord]:
        return self.records[-1] if self.records else None

    def total_samples(self) -> int:
        return self.records[-1].samples if self.records else 0


@dataclass
class RunResult:
    """Result of a solver run."""
    success: bool
    error: Optional[ErrorType] = None
    trace: Trace = field(default_factory=Trace)
    census: EventCensus = field(default_factory=EventCensus)
    x_out: Optional[np.ndarray] = None
    message: str = ""
    diagnostics: Dict[str, Any] = field(default_factory=dict)


class TraceCollector:
    """Collects iterate records for one run and assembles the Trace."""

    def __init__(self, params: Optional[Dict[str, Any]] = None):
        """Initialize an empty collector with the resolved run parameters."""
        self.trace = Trace(params=dict(params or {}))
        self.samples = 0
        self.start_time: Optional[float] = None

    def start_timing(self) -> None:
        self.start_time = perf_counter()

    def stop_timing(self) -> None:
        if self.start_time is not None:
            self.trace.wall_time = perf_counter() - self.start_time

    def add_samples(self, count: int) -> None:
        """Charge count gradient evaluations to the run budget."""
        self.samples += int(count)

    def record(self, s: int, k: int, x, psi: float, step: float, **metrics) -> IterRecord:
        """
        Append a record for iterate x_{s,k}.

        Args:
            s: Epoch index (0 for deterministic methods)
            k: Step index within the epoch
            x: Current iterate
            psi: Objective value at x
            step: Step size used to leave x
            **metrics: Optional IterRecord fields (mapping norms, flags)

        Returns:
            The stored record
        """
        rec = IterRecord(
            iter=len(self.trace.records),
            s=s,
            k=k,
            x=np.array(x, dtype=float, copy=True),
            psi=float(psi),
            step=float(step),
            samples=self.samples,
            **metrics,
        )
        self.trace.records.append(rec)
        return rec

    def open_epoch(self, s: int, ball: Ball) -> None:
        self.trace.epoch_balls[s] = ball

    def close_epoch(self, s: int, length: int) -> None:
        self.trace.epoch_lengths[s] = int(length)

    def set_param(self, name: str, value: Any) -> None:
        self.trace.params[name] = value

    def finish(self, stop_reason: str) -> Trace:
        self.trace.stop_reason = stop_reason
        self.stop_timing()
        return self.trace


@dataclass
class RunSummary:
    """Scalar summary of one seeded run for ensemble statistics."""
    seed: int
    success: bool
    samples: int
    steps: int
    epochs: int
    final_norm_G_sq: Optional[float] = None
    output_norm_G_sq: Optional[float] = None
    final_norm_D_sq: Optional[float] = None
    fraction_I1: float = 0.0
    fraction_I2: float = 0.0
    bounds_compliant: Optional[bool] = None
    samples_to_eps: Optional[int] = None
    wall_time: float = 0.0


def summarize_run(seed: int, result: RunResult) -> RunSummary:
    """Collapse a RunResult into a RunSummary."""
    trace = result.trace
    tau = int(trace.params.get("tau") or 1)
    return RunSummary(
        seed=seed,
        success=result.success,
        samples=trace.total_samples(),
        steps=len(trace),
        epochs=result.census.epochs,
        final_norm_G_sq=result.diagnostics.get("final_norm_G_sq"),
        output_norm_G_sq=result.diagnostics.get("output_norm_G_sq"),
        final_norm_D_sq=result.diagnostics.get("final_norm_D_sq"),
        fraction_I1=result.census.fraction_I1(),
        fraction_I2=result.census.fraction_I2(tau),
        bounds_compliant=result.diagnostics.get("bounds_compliant"),
        samples_to_eps=result.diagnostics.get("samples_to_eps"),
        wall_time=trace.wall_time,
    )


class EnsembleCollector:
    """Keeps the history of run summaries across seeds or sweep points."""

    def __init__(self):
        self.summary_history: List[RunSummary] = []

    def save_to_history(self, summary: RunSummary) -> None:
        self.summary_history.append(summary)

    def get_history(self) -> List[RunSummary]:
        return self.summary_history.copy()

    def get_average_metrics(self) -> Optional[dict]:
        """Averages over history; optional fields average over the runs that report them."""
        if not self.summary_history:
            return None
        count = len(self.summary_history)

        def mean_of(name: str) -> Optional[float]:
            values = [getattr(s, name) for s in self.summary_history if getattr(s, name) is not None]
            return float(np.mean(values)) if values else None

        compliant = [s.bounds_compliant for s in self.summary_history if s.bounds_compliant is not None]
        return {
            "avg_samples": mean_of("samples"),
            "avg_steps": mean_of("steps"),
            "avg_output_norm_G_sq": mean_of("output_norm_G_sq"),
            "avg_final_norm_D_sq": mean_of("final_norm_D_sq"),
            "avg_samples_to_eps": mean_of("samples_to_eps"),
            "avg_fraction_I1": mean_of("fraction_I1"),
            "avg_fraction_I2": mean_of("fraction_I2"),
            "success_rate": sum(s.success for s in self.summary_history) / count,
            "compliance_rate": (sum(compliant) / len(compliant)) if compliant else None,
            "total_runs": count,
        }
