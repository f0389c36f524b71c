"""Two-stage pipeline: plan through obstacles, then displace what the path overlaps."""

import logging
import time
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

from cdplan.core.errors import GoalNotReached, NoFeasibleSolutionFound
from cdplan.core.geometry import shapes_intersect
from cdplan.core.ir import (
    DisplacementSolution,
    OverlapReport,
    PlannerConfig,
    RunMetrics,
    RunReport,
    Scenario,
    Shape,
    Trajectory,
)
from cdplan.engine import overlap
from cdplan.engine.displacement import (
    DisplacementConfig,
    metric_total_displacement,
    resolve_all,
    sweep_footprints,
)
from cdplan.engine.nlp import NlpSettings

logger = logging.getLogger(__name__)


def recompute_metrics(solutions: Sequence[DisplacementSolution]) -> Tuple[float, int]:
    """(total displacement magnitude, displaced count) from the solutions alone."""
    count = sum(
        1 for s in solutions if s.feasible and (s.centroid_shift > 0 or s.rotation != 0)
    )
    return metric_total_displacement(solutions), count


def final_shapes(scenario: Scenario, solutions: Sequence[DisplacementSolution]) -> Dict[str, Shape]:
    """Every obstacle's shape after displacement (original where not displaced)."""
    shapes = {ob.id: ob.shape for ob in scenario.obstacles}
    for s in solutions:
        if s.feasible:
            shapes[s.obstacle_id] = s.new_shape
    return shapes


def certificate_sweep(
    scenario: Scenario,
    trajectory: Trajectory,
    solutions: Sequence[DisplacementSolution],
    resolution: float = 0.01,
) -> List[Tuple[str, int]]:
    """
    Exact-geometry check of the final layout against the swept robot footprint.

    Returns (obstacle id, footprint sample index) for every intersecting pair;
    touching counts as intersecting.
    """
    sweep = sweep_footprints(trajectory, scenario.robot, resolution)
    violations: List[Tuple[str, int]] = []
    for obstacle_id, shape in final_shapes(scenario, solutions).items():
        for i in sweep.near(shape, 0.0):
            if shapes_intersect(shape, sweep.shapes[i]):
                violations.append((obstacle_id, int(i)))
    if violations:
        logger.warning("certificate sweep found %d intersecting samples", len(violations))
    return violations


def _assemble(
    scenario: Scenario,
    trajectory: Trajectory,
    report: OverlapReport,
    goal_reached: bool,
    settings: Optional[NlpSettings],
    config: DisplacementConfig,
    overlap_seconds: float,
) -> RunReport:
    started = time.perf_counter()
    resolved = resolve_all(trajectory, scenario, settings, config)
    displacement_seconds = time.perf_counter() - started
    run = RunReport(
        scenario=scenario,
        trajectory=trajectory,
        overlap=report,
        solutions=resolved.solutions,
        metrics=RunMetrics(
            total_displacement_magnitude=resolved.total_displacement_magnitude,
            displaced_count=resolved.displaced_count,
            overlap_stage_seconds=overlap_seconds,
            displacement_stage_seconds=displacement_seconds,
        ),
        goal_reached=goal_reached,
        unresolved_ids=list(resolved.unresolved_ids),
    )
    run.certificate_violations = certificate_sweep(
        scenario, trajectory, run.solutions, config.witness_resolution
    )
    return run


def _raise_for(run: RunReport) -> None:
    if not run.goal_reached:
        raise GoalNotReached("Goal not reached", trajectory=run.trajectory, report=run)
    if run.unresolved_ids:
        raise NoFeasibleSolutionFound(
            f"No certified displacement for {', '.join(run.unresolved_ids)}",
            obstacle_id=run.unresolved_ids[0],
            best=run,
        )


def run_pipeline(
    scenario: Scenario,
    planner: Optional[PlannerConfig] = None,
    config: Optional[DisplacementConfig] = None,
    settings: Optional[NlpSettings] = None,
    raise_on_failure: bool = True,
) -> RunReport:
    """
    Stage 1, stage 2, then the certificate sweep.

    With `raise_on_failure` a missed goal or an unresolved obstacle raises
    GoalNotReached / NoFeasibleSolutionFound carrying the partial report;
    otherwise the report's status records it.
    """
    config = config or DisplacementConfig()
    if planner is not None:
        scenario = replace(scenario, planner=planner)
    goal_reached = True
    started = time.perf_counter()
    try:
        trajectory, report = overlap.plan(scenario)
    except GoalNotReached as e:
        trajectory, report = e.trajectory, e.report
        goal_reached = False
    overlap_seconds = time.perf_counter() - started

    run = _assemble(scenario, trajectory, report, goal_reached, settings, config, overlap_seconds)
    logger.info(
        "%s: status %s, %d displaced, magnitude %.4f m",
        scenario.name,
        run.status,
        run.metrics.displaced_count,
        run.metrics.total_displacement_magnitude,
    )
    if raise_on_failure:
        _raise_for(run)
    return run


def resolve_only(
    scenario: Scenario,
    trajectory: Trajectory,
    config: Optional[DisplacementConfig] = None,
    settings: Optional[NlpSettings] = None,
    raise_on_failure: bool = True,
) -> RunReport:
    """Stage 2 alone, for a trajectory planned elsewhere."""
    config = config or DisplacementConfig()
    goal = scenario.robot.goal
    goal_reached = trajectory.states[-1].distance_to(goal) <= scenario.planner.goal_tolerance
    report = overlap.overlap_report(scenario, trajectory.states)
    run = _assemble(scenario, trajectory, report, goal_reached, settings, config, 0.0)
    if raise_on_failure:
        _raise_for(run)
    return run


def check_report(run: RunReport, resolution: Optional[float] = None) -> List[str]:
    """
    Re-certify a saved report.

    Returns human-readable problems: intersecting samples and metrics that do
    not match the embedded solutions.
    """
    resolution = resolution or DisplacementConfig().witness_resolution
    problems = [
        f"obstacle {oid} intersects footprint sample {i}"
        for oid, i in certificate_sweep(run.scenario, run.trajectory, run.solutions, resolution)
    ]
    magnitude, count = recompute_metrics(run.solutions)
    if magnitude != run.metrics.total_displacement_magnitude:
        problems.append(
            f"total displacement {run.metrics.total_displacement_magnitude} "
            f"does not match solutions ({magnitude})"
        )
    if count != run.metrics.displaced_count:
        problems.append(
            f"displaced count {run.metrics.displaced_count} does not match solutions ({count})"
        )
    return problems
