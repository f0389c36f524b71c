"""
cdplan - motion planning through movable obstacles.

A receding-horizon planner finds a path that may overlap movable obstacles
while penalizing the overlap; a constrained solve then rigidly displaces
each overlapped obstacle just far enough to clear the swept robot.

Main APIs:
- run_pipeline: both stages plus an exact certificate sweep
- OverlapPlanner: stage 1 on its own
- DisplacementProblem / displace: stage 2 for a single obstacle
- get_scenario: bundled scenarios

Backends:
- SvgExporter: drawing of a run report
- TableExporter: CSV/JSON results of an experiment suite
"""

from cdplan.core.ir import RobotState, RunReport, Scenario, Trajectory
from cdplan.core.serialization import JsonSerializer
from cdplan.engine import DisplacementConfig, DisplacementProblem, OverlapPlanner, displace, run_pipeline
from cdplan.backend import SvgExporter, TableExporter
from cdplan.scenarios import get_scenario

__all__ = [
    # Core IR
    "RobotState",
    "RunReport",
    "Scenario",
    "Trajectory",
    # Serialization
    "JsonSerializer",
    # Engine
    "DisplacementConfig",
    "DisplacementProblem",
    "OverlapPlanner",
    "displace",
    "run_pipeline",
    "get_scenario",
    # Backends
    "SvgExporter",
    "TableExporter",
]
