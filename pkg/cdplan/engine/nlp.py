"""
Smooth constrained nonlinear programming.

solve() runs an augmented-Lagrangian outer loop around scipy's L-BFGS-B,
which minimizes the augmented Lagrangian subject to simple variable bounds.
Derivatives default to central finite differences.

Example:
    >>> problem = NlpProblem(
    ...     dimension=1,
    ...     objective=lambda z: (z[0] - 3.0) ** 2,
    ...     initial_point=np.zeros(1),
    ...     inequality_constraints=[lambda z: z[0] - 1.0],
    ... )
    >>> result = solve(problem)
    >>> round(float(result.point[0]), 4)
    1.0
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import Bounds, minimize

from cdplan.core.errors import NonFiniteEvaluation

logger = logging.getLogger(__name__)

ScalarFn = Callable[[np.ndarray], float]
# Constraint callbacks may return a scalar or a vector of constraint values.
ConstraintFn = Callable[[np.ndarray], "float | np.ndarray"]
BatchFn = Callable[[np.ndarray], np.ndarray]


class NlpStatus(str, Enum):
    CONVERGED = "converged"
    ITERATION_LIMIT = "iteration_limit"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class NlpSettings:
    max_outer_iterations: int = 50
    max_inner_iterations: int = 500
    constraint_tolerance: float = 1e-6
    gradient_tolerance: float = 1e-6
    finite_difference_step: float = 1e-7
    penalty_growth: float = 10.0
    initial_penalty: float = 10.0
    max_penalty: float = 1e9
    function_tolerance: float = 1e-12

    def __post_init__(self):
        for name in (
            "max_outer_iterations",
            "max_inner_iterations",
            "constraint_tolerance",
            "gradient_tolerance",
            "finite_difference_step",
            "penalty_growth",
            "initial_penalty",
            "max_penalty",
            "function_tolerance",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"NlpSettings.{name} must be positive")


@dataclass
class NlpProblem:
    """
    minimize objective(z) subject to g(z) <= 0, h(z) = 0, lower <= z <= upper.

    `objective_gradient` is optional; without it the gradient is taken by
    central differences.
    """

    dimension: int
    objective: ScalarFn
    initial_point: np.ndarray
    inequality_constraints: Sequence[ConstraintFn] = field(default_factory=list)
    equality_constraints: Sequence[ConstraintFn] = field(default_factory=list)
    lower_bounds: Optional[np.ndarray] = None
    upper_bounds: Optional[np.ndarray] = None
    objective_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.initial_point = np.asarray(self.initial_point, dtype=float).reshape(-1)
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.initial_point.shape != (self.dimension,):
            raise ValueError(
                f"initial_point has shape {self.initial_point.shape}, expected ({self.dimension},)"
            )

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lower = (
            np.full(self.dimension, -np.inf)
            if self.lower_bounds is None
            else np.asarray(self.lower_bounds, dtype=float)
        )
        upper = (
            np.full(self.dimension, np.inf)
            if self.upper_bounds is None
            else np.asarray(self.upper_bounds, dtype=float)
        )
        return lower, upper


@dataclass
class NlpResult:
    point: np.ndarray
    objective_value: float
    max_constraint_violation: float
    status: NlpStatus
    outer_iterations: int = 0
    kkt_residual: float = float("inf")

    @property
    def converged(self) -> bool:
        return self.status == NlpStatus.CONVERGED


def _finite(value, what: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEvaluation(f"{what} returned a non-finite value")
    return arr


def gradient(fn: ScalarFn, z: np.ndarray, h: float = 1e-7) -> np.ndarray:
    """Central-difference gradient: (fn(z + h e_i) - fn(z - h e_i)) / 2h."""
    if not h > 0:
        raise ValueError("finite difference step must be positive")
    z = np.asarray(z, dtype=float)
    grad = np.zeros_like(z)
    for i in range(z.size):
        step = np.zeros_like(z)
        step[i] = h
        forward = _finite(fn(z + step), "function")[0]
        backward = _finite(fn(z - step), "function")[0]
        grad[i] = (forward - backward) / (2.0 * h)
    return grad


def batched_gradient(fn_batch: BatchFn, z: np.ndarray, h: float = 1e-7) -> np.ndarray:
    """
    Central-difference gradient of a function that evaluates a batch of points.

    `fn_batch` maps an (m, n) array to m values; all 2n perturbed points are
    evaluated in one call.
    """
    if not h > 0:
        raise ValueError("finite difference step must be positive")
    z = np.asarray(z, dtype=float)
    n = z.size
    offsets = np.eye(n) * h
    points = np.concatenate([z + offsets, z - offsets], axis=0)
    values = _finite(fn_batch(points), "function")
    return (values[:n] - values[n:]) / (2.0 * h)


def _stack(constraints: Sequence[ConstraintFn], z: np.ndarray, what: str) -> np.ndarray:
    if not constraints:
        return np.zeros(0)
    return np.concatenate([_finite(c(z), what) for c in constraints])


def constraint_violation(problem: NlpProblem, z: np.ndarray) -> float:
    """Largest violation of any constraint or bound at z."""
    z = np.asarray(z, dtype=float)
    eq = _stack(problem.equality_constraints, z, "equality constraint")
    ineq = _stack(problem.inequality_constraints, z, "inequality constraint")
    lower, upper = problem.bounds()
    parts = [
        np.abs(eq),
        np.maximum(ineq, 0.0),
        np.maximum(lower - z, 0.0),
        np.maximum(z - upper, 0.0),
    ]
    return float(max((p.max() for p in parts if p.size), default=0.0))


class _AugmentedLagrangian:
    """Φ(z) = f + λ·h + μ/2 |h|² + 1/(2μ) Σ (max(0, ν + μ g)² - ν²)."""

    def __init__(self, problem: NlpProblem, settings: NlpSettings):
        self.problem = problem
        self.settings = settings
        self.lam = np.zeros(0)
        self.nu = np.zeros(0)
        self.mu = settings.initial_penalty

    def objective(self, z: np.ndarray) -> float:
        return float(_finite(self.problem.objective(z), "objective")[0])

    def penalty(self, z: np.ndarray) -> float:
        eq = _stack(self.problem.equality_constraints, z, "equality constraint")
        ineq = _stack(self.problem.inequality_constraints, z, "inequality constraint")
        value = 0.0
        if eq.size:
            value += float(self.lam @ eq + 0.5 * self.mu * (eq @ eq))
        if ineq.size:
            shifted = np.maximum(0.0, self.nu + self.mu * ineq)
            value += float((shifted @ shifted - self.nu @ self.nu) / (2.0 * self.mu))
        return value

    def value(self, z: np.ndarray) -> float:
        return self.objective(z) + self.penalty(z)

    def grad(self, z: np.ndarray) -> np.ndarray:
        h = self.settings.finite_difference_step
        if self.problem.objective_gradient is not None:
            g = _finite(self.problem.objective_gradient(z), "objective gradient")
        else:
            g = gradient(self.objective, z, h)
        if self.problem.equality_constraints or self.problem.inequality_constraints:
            g = g + gradient(self.penalty, z, h)
        return g

    def update_multipliers(self, z: np.ndarray) -> None:
        eq = _stack(self.problem.equality_constraints, z, "equality constraint")
        ineq = _stack(self.problem.inequality_constraints, z, "inequality constraint")
        if eq.size:
            self.lam = self.lam + self.mu * eq
        if ineq.size:
            self.nu = np.maximum(0.0, self.nu + self.mu * ineq)


def _projected_gradient(z: np.ndarray, g: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> float:
    if not z.size:
        return 0.0
    return float(np.max(np.abs(z - np.clip(z - g, lower, upper))))


def solve(problem: NlpProblem, settings: Optional[NlpSettings] = None) -> NlpResult:
    """
    Find a local minimum from `problem.initial_point`.

    Converged means the constraint violation is within constraint_tolerance
    and the projected gradient of the augmented Lagrangian is within
    gradient_tolerance.
    """
    settings = settings or NlpSettings()
    lower, upper = problem.bounds()
    al = _AugmentedLagrangian(problem, settings)
    eq_count = _stack(problem.equality_constraints, problem.initial_point, "equality constraint").size
    ineq_count = _stack(
        problem.inequality_constraints, problem.initial_point, "inequality constraint"
    ).size
    al.lam = np.zeros(eq_count)
    al.nu = np.zeros(ineq_count)
    has_constraints = bool(eq_count or ineq_count)

    z = np.clip(problem.initial_point.copy(), lower, upper)
    scipy_bounds = Bounds(lower, upper)

    best_feasible: Optional[Tuple[float, np.ndarray]] = None
    start_violation = constraint_violation(problem, z)
    if start_violation <= settings.constraint_tolerance:
        best_feasible = (al.objective(z), z.copy())

    previous_violation = np.inf
    violation = start_violation
    residual = np.inf
    status = NlpStatus.ITERATION_LIMIT
    outer = 0
    for outer in range(1, settings.max_outer_iterations + 1):
        inner = minimize(
            al.value,
            z,
            jac=al.grad,
            method="L-BFGS-B",
            bounds=scipy_bounds,
            options={
                "maxiter": settings.max_inner_iterations,
                "gtol": settings.gradient_tolerance,
                "ftol": settings.function_tolerance,
            },
        )
        z = np.clip(np.asarray(inner.x, dtype=float), lower, upper)
        residual = _projected_gradient(z, al.grad(z), lower, upper)
        violation = constraint_violation(problem, z)
        logger.debug(
            "outer %d: f=%.6g violation=%.3g residual=%.3g mu=%.3g",
            outer,
            al.objective(z),
            violation,
            residual,
            al.mu,
        )
        if violation <= settings.constraint_tolerance:
            value = al.objective(z)
            if best_feasible is None or value <= best_feasible[0]:
                best_feasible = (value, z.copy())
        if not has_constraints:
            status = (
                NlpStatus.CONVERGED
                if residual <= settings.gradient_tolerance
                else NlpStatus.ITERATION_LIMIT
            )
            break
        if violation <= settings.constraint_tolerance and residual <= settings.gradient_tolerance:
            status = NlpStatus.CONVERGED
            break
        al.update_multipliers(z)
        if violation > 0.25 * previous_violation:
            al.mu = min(al.mu * settings.penalty_growth, settings.max_penalty)
        previous_violation = violation
    else:
        if violation > settings.constraint_tolerance:
            status = (
                NlpStatus.INFEASIBLE
                if al.mu >= settings.max_penalty
                else NlpStatus.ITERATION_LIMIT
            )

    point = z
    if best_feasible is not None and (
        violation > settings.constraint_tolerance or al.objective(z) > best_feasible[0]
    ):
        point = best_feasible[1]
        residual = _projected_gradient(point, al.grad(point), lower, upper)
        if residual > settings.gradient_tolerance:
            status = NlpStatus.ITERATION_LIMIT
    return NlpResult(
        point=point,
        objective_value=al.objective(point),
        max_constraint_violation=constraint_violation(problem, point),
        status=status,
        outer_iterations=outer,
        kkt_residual=residual,
    )


def solve_multistart(
    problem: NlpProblem, starts: Sequence[np.ndarray], settings: Optional[NlpSettings] = None
) -> List[NlpResult]:
    """Solve once per start; results come back in the order of `starts`."""
    results = []
    for start in starts:
        candidate = NlpProblem(
            dimension=problem.dimension,
            objective=problem.objective,
            initial_point=np.asarray(start, dtype=float),
            inequality_constraints=problem.inequality_constraints,
            equality_constraints=problem.equality_constraints,
            lower_bounds=problem.lower_bounds,
            upper_bounds=problem.upper_bounds,
            objective_gradient=problem.objective_gradient,
        )
        results.append(solve(candidate, settings))
    return results
