"""Planning engine: overlap planner, obstacle displacement and the pipeline around them."""

from .displacement import DisplacementConfig, DisplacementProblem, displace, resolve_all
from .overlap import OverlapPlanner
from .pipeline import check_report, resolve_only, run_pipeline

__all__ = [
    "DisplacementConfig",
    "DisplacementProblem",
    "OverlapPlanner",
    "check_report",
    "displace",
    "resolve_all",
    "resolve_only",
    "run_pipeline",
]
