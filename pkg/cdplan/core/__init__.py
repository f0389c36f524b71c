"""Core data structures for cdplan: geometry, scenario IR, errors and JSON formats."""

from .ir import (
    DisplacementSolution,
    ObstacleSpec,
    PlannerConfig,
    RobotSpec,
    RobotState,
    RunReport,
    Scenario,
    Trajectory,
)
from .serialization import JsonSerializer

__all__ = [
    "DisplacementSolution",
    "ObstacleSpec",
    "PlannerConfig",
    "RobotSpec",
    "RobotState",
    "RunReport",
    "Scenario",
    "Trajectory",
    "JsonSerializer",
]
