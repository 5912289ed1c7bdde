"""Core data models for the Bregman proximal gradient library."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

# Distance to a ball boundary under which a point counts as on the boundary.
BOUNDARY_TOL = 1e-9


class KernelKind(Enum):
    """Bregman kernel family."""
    QUADRATIC = "quadratic"
    POLYNOMIAL = "polynomial"
    MONOMIAL = "monomial"


class TermKind(Enum):
    """Nonsmooth composite term family."""
    ZERO = "zero"
    L1 = "l1"
    BALL = "ball"
    L1_PLUS_BALL = "l1_plus_ball"


class ProblemStructure(Enum):
    """How the smooth part of a problem is accessed."""
    DETERMINISTIC = "deterministic"
    FINITE_SUM = "finite_sum"
    EXPECTATION = "expectation"


class OutputSelection(Enum):
    """Rule for drawing the reported output iterate of a stochastic run."""
    UNIFORM_ALL = "uniform_all"
    UNIFORM_INTERIOR = "uniform_interior"


class Algorithm(Enum):
    """Solver names accepted by the harness."""
    BPG = "bpg"
    ALG1 = "alg1"
    ALG2 = "alg2"
    ALG2_EXPECTATION = "alg2_expectation"
    TBPG = "tbpg"
    TBPG_SVR = "tbpg_svr"
    FLOW = "flow"


class ErrorType(Enum):
    """Error type enumeration."""
    NO_BRACKET = "no_bracket"
    NO_CONVERGENCE = "no_convergence"
    NON_FINITE = "non_finite"
    UNSUPPORTED_KERNEL = "unsupported_kernel"
    UNSUPPORTED_TERM = "unsupported_term"
    DOMAIN_VIOLATION = "domain_violation"
    SINGULAR_HESSIAN = "singular_hessian"
    INSUFFICIENT_BUDGET = "insufficient_budget"
    BUDGET_EXHAUSTED = "budget_exhausted"
    DEGENERATE = "degenerate"
    CONFIG_ERROR = "config_error"
    IO_ERROR = "io_error"


class BregmanError(Exception):
    """Failure of a numerical operation, tagged with its ErrorType."""

    def __init__(self, error_type: ErrorType, message: str = ""):
        text = f"{error_type.value}: {message}" if message else error_type.value
        super().__init__(text)
        self.error_type = error_type
        self.message = message


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed Euclidean ball, used both as a composite term and as an epoch bound."""
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.radius > 0:
            raise BregmanError(ErrorType.DEGENERATE, f"ball radius must be positive, got {self.radius}")

    def distance_to_center(self, x: np.ndarray) -> float:
        """Euclidean distance from x to the center."""
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.center))

    def distance_to_boundary(self, x: np.ndarray) -> float:
        """Signed distance radius - ||x - center|| (negative outside)."""
        return self.radius - self.distance_to_center(x)

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        """Check if x lies in the ball, up to tol."""
        return self.distance_to_center(x) <= self.radius + tol

    def on_boundary(self, x: np.ndarray, tol: float = BOUNDARY_TOL) -> bool:
        """Check if x lies within tol of the sphere (from either side)."""
        return abs(self.distance_to_boundary(x)) <= tol

    def project(self, x: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the ball."""
        x = np.asarray(x, dtype=float)
        gap = x - self.center
        dist = float(np.linalg.norm(gap))
        if dist <= self.radius or math.isinf(self.radius):
            return x.copy()
        return self.center + gap * (self.radius / dist)


@dataclass
class SolverConfig:
    """
    Run parameters shared by every solver.

    ``None`` in any of lam, eta, gamma, tau, b, epochs means "auto": the solver
    resolves it from its parameter rule and records the value in the trace.
    """
    epsilon: float = 1e-3
    lam: Optional[float] = None
    eta: Optional[float] = None
    gamma: Optional[float] = None
    tau: Optional[int] = None
    b: Optional[int] = None
    epochs: Optional[int] = None
    q: float = 0.1
    max_total_samples: int = 10_000_000
    max_iter: int = 10_000
    seed: int = 0
    output_selection: Optional[OutputSelection] = None
    psi_lower_bound: Optional[float] = None
    record_mappings: bool = True
    x0: Optional[List[float]] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise BregmanError(ErrorType.CONFIG_ERROR, f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.q < 0.5:
            raise BregmanError(ErrorType.CONFIG_ERROR, f"q must lie in (0, 1/2), got {self.q}")
        for name in ("lam", "eta", "gamma"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise BregmanError(ErrorType.CONFIG_ERROR, f"{name} must be positive, got {value}")
        for name in ("tau", "b", "epochs"):
            value = getattr(self, name)
            if value is not None and int(value) < 1:
                raise BregmanError(ErrorType.CONFIG_ERROR, f"{name} must be at least 1, got {value}")


@dataclass
class EventCensus:
    """Realized mismatch sets and travel statistics of one run."""
    I1: Set[int] = field(default_factory=set)
    I2: Set[Tuple[int, int]] = field(default_factory=set)
    R_eps: float = 0.0
    T_eps: Optional[int] = None
    epochs: int = 0
    steps: int = 0

    def fraction_I1(self) -> float:
        """|I1| / S, zero for an empty run."""
        return len(self.I1) / self.epochs if self.epochs else 0.0

    def fraction_I2(self, tau: int) -> float:
        """|I2| / (S tau), zero for an empty run."""
        denom = self.epochs * tau
        return len(self.I2) / denom if denom else 0.0

    def as_dict(self) -> Dict[str, object]:
        """JSON-friendly view."""
        return {
            "I1": sorted(self.I1),
            "I2": sorted([list(pair) for pair in self.I2]),
            "R_eps": self.R_eps,
            "T_eps": self.T_eps,
            "epochs": self.epochs,
            "steps": self.steps,
        }
