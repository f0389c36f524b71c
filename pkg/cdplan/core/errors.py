"""
Exception hierarchy for cdplan.

Every error derives from CdplanError and from the builtin exception that
matches its nature, so callers may catch either. Errors raised after partial
work carry that work as attributes so the pipeline can still report it.
"""

from typing import Any, Optional


class CdplanError(Exception):
    """Base class for all cdplan errors."""


class ParallelSegments(CdplanError, ValueError):
    """Raised when two segments are (numerically) parallel."""


class ControlOutOfBounds(CdplanError, ValueError):
    """Raised when a control violates the model's box bounds."""


class NonFiniteEvaluation(CdplanError, ArithmeticError):
    """Raised when an objective or constraint callback returns NaN or inf."""


class SolverFailure(CdplanError, RuntimeError):
    """Raised when an NLP solve does not converge; `result` is the best effort."""

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


class GoalNotReached(CdplanError, RuntimeError):
    """Raised when the receding-horizon loop exhausts its step budget."""

    def __init__(self, message: str, trajectory: Any = None, report: Any = None):
        super().__init__(message)
        self.trajectory = trajectory
        self.report = report


class NoOverlap(CdplanError, ValueError):
    """Raised when a displacement is requested for an obstacle nothing overlaps."""


class NoFeasibleSolutionFound(CdplanError, RuntimeError):
    """Raised when no displacement start produced a certified solution."""

    def __init__(
        self,
        message: str,
        obstacle_id: Optional[str] = None,
        best: Any = None,
    ):
        super().__init__(message)
        self.obstacle_id = obstacle_id
        self.best = best


class NoFeasibleInWindow(CdplanError, RuntimeError):
    """Raised when the brute-force oracle finds no feasible grid cell."""


class ScenarioError(CdplanError, ValueError):
    """Base class for problems with scenario, trajectory or report files."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        obstacle_id: Optional[str] = None,
        line: Optional[int] = None,
    ):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if obstacle_id is not None:
            location.append(f"obstacle {obstacle_id!r}")
        if field is not None:
            location.append(f"field {field!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.field = field
        self.obstacle_id = obstacle_id
        self.line = line


class ParseError(ScenarioError):
    """The file is not valid JSON or does not have the expected structure."""


class ValidationError(ScenarioError):
    """The file parses but violates a scenario invariant."""
