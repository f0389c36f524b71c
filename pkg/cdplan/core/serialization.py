"""
JSON serialization for scenarios, trajectories and run reports.

All formats carry an explicit "version" and write floats with Python's
shortest round-trip repr, so save followed by load is lossless. Loading
validates every scenario invariant and reports the offending field, obstacle
id and (when the source text is known) line number.
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from cdplan.core.errors import ParseError, ScenarioError, ValidationError
from cdplan.core.geometry import Circle, CircleCover, ConvexPolygon, Point2, signed_area
from cdplan.core.ir import (
    CostKind,
    DisplacementSolution,
    DomainBounds,
    DynamicsModel,
    ObstacleSpec,
    OverlapCostMode,
    OverlapReport,
    PlannerConfig,
    RobotSpec,
    RobotState,
    RunMetrics,
    RunReport,
    Scenario,
    Shape,
    Trajectory,
    Weights,
    default_cover,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

PathLike = Union[str, Path]


class _Locator:
    """Finds the line of a key or obstacle id in the source text."""

    def __init__(self, text: Optional[str]):
        self.lines = text.splitlines() if text else []

    def _find(self, pattern: str) -> Optional[int]:
        regex = re.compile(pattern)
        for number, line in enumerate(self.lines, start=1):
            if regex.search(line):
                return number
        return None

    def obstacle(self, obstacle_id: str) -> Optional[int]:
        return self._find(r'"id"\s*:\s*' + re.escape(json.dumps(obstacle_id)))

    def key(self, name: str) -> Optional[int]:
        return self._find(re.escape(json.dumps(name)) + r"\s*:")


def _require(data: Dict[str, Any], key: str, where: str, locator: _Locator) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise ParseError(f"Missing {where} field", field=key, line=locator.key(where))
    return data[key]


def _check_version(data: Any, what: str) -> None:
    if not isinstance(data, dict):
        raise ParseError(f"A {what} file must contain a JSON object")
    version = data.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError(f"Unsupported {what} version {version!r}", field="version")


def _parse_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON in {what}: {e.msg}", line=e.lineno) from e


def _read(path: PathLike) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise FileNotFoundError(f"Cannot read {path}: {e.strerror}") from e


def _triple(values: Any, field: str, locator: _Locator) -> tuple:
    if not isinstance(values, (list, tuple)) or len(values) != 3:
        raise ParseError("Expected a list of 3 numbers", field=field, line=locator.key(field))
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError) as e:
        raise ParseError(f"Expected numbers: {e}", field=field, line=locator.key(field)) from e


class JsonSerializer:
    """
    Converts scenarios, trajectories and reports to and from JSON.

    `strict` loading rejects clockwise polygons instead of reversing them.
    """

    # -- shapes -------------------------------------------------------------

    @staticmethod
    def shape_to_dict(shape: Shape) -> Dict[str, Any]:
        if isinstance(shape, Circle):
            return {"circle": {"cx": shape.center.x, "cy": shape.center.y, "r": shape.radius}}
        return {"polygon": [[v.x, v.y] for v in shape.vertices]}

    @staticmethod
    def _circle_from_dict(data: Any, field: str, obstacle_id: Optional[str] = None) -> Circle:
        try:
            return Circle(Point2(float(data["cx"]), float(data["cy"])), float(data["r"]))
        except (KeyError, TypeError) as e:
            raise ParseError(
                f"Circle needs numeric cx, cy and r: {e}", field=field, obstacle_id=obstacle_id
            ) from e
        except ValueError as e:
            raise ValidationError(str(e), field=field, obstacle_id=obstacle_id) from e

    @staticmethod
    def _polygon_from_coords(
        coords: Any,
        field: str,
        strict: bool,
        obstacle_id: Optional[str] = None,
        line: Optional[int] = None,
    ) -> ConvexPolygon:
        try:
            points = [Point2(float(x), float(y)) for x, y in coords]
        except (TypeError, ValueError) as e:
            raise ParseError(
                f"Polygon must be a list of [x, y] pairs: {e}",
                field=field,
                obstacle_id=obstacle_id,
                line=line,
            ) from e
        if len(points) >= 3 and signed_area(points) < 0:
            if strict:
                raise ValidationError(
                    "Polygon vertices are clockwise", field=field, obstacle_id=obstacle_id, line=line
                )
            logger.warning(
                "%s%s: clockwise polygon reversed",
                field,
                f" of obstacle {obstacle_id!r}" if obstacle_id is not None else "",
            )
            points.reverse()
        try:
            return ConvexPolygon(tuple(points))
        except ValueError as e:
            raise ValidationError(str(e), field=field, obstacle_id=obstacle_id, line=line) from e

    @staticmethod
    def shape_from_dict(data: Dict[str, Any], strict: bool = False) -> Shape:
        if "circle" in data:
            return JsonSerializer._circle_from_dict(data["circle"], "circle")
        if "polygon" in data:
            return JsonSerializer._polygon_from_coords(data["polygon"], "polygon", strict)
        raise ParseError("Shape needs a 'polygon' or a 'circle'")

    @staticmethod
    def _cover_to_list(cover: CircleCover) -> List[Dict[str, float]]:
        return [{"cx": c.center.x, "cy": c.center.y, "r": c.radius} for c in cover.circles]

    # -- scenarios ----------------------------------------------------------

    @staticmethod
    def planner_to_dict(planner: PlannerConfig) -> Dict[str, Any]:
        reference = planner.state_reference
        if reference is not None and not isinstance(reference, str):
            reference = [float(v) for v in reference]
        return {
            "mode": planner.mode.kind.value,
            "horizon": planner.horizon,
            "max_steps": planner.max_steps,
            "goal_tolerance": planner.goal_tolerance,
            "weights": {
                "Mx": planner.weights.Mx,
                "Mi": planner.weights.Mi,
                "Mu": planner.weights.Mu,
                "Mg": planner.weights.Mg,
            },
            "eta": planner.mode.eta0,
            "epsilon": planner.mode.epsilon,
            "state_reference": reference,
            "wall_weight": planner.wall_weight,
        }

    @staticmethod
    def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
        robot = scenario.robot
        return {
            "version": FORMAT_VERSION,
            "name": scenario.name,
            "domain": {
                "xmin": scenario.domain.xmin,
                "xmax": scenario.domain.xmax,
                "ymin": scenario.domain.ymin,
                "ymax": scenario.domain.ymax,
            },
            "robot": {
                "model": robot.model.kind.value,
                "dt": robot.model.dt,
                "control_lower": list(robot.model.control_lower),
                "control_upper": list(robot.model.control_upper),
                "polygons": [[[v.x, v.y] for v in p.vertices] for p in robot.polygons],
                "circles": JsonSerializer._cover_to_list(robot.cover),
                "start": [robot.start.x, robot.start.y, robot.start.theta],
                "goal": [robot.goal.x, robot.goal.y, robot.goal.theta],
            },
            "obstacles": [
                {
                    "id": ob.id,
                    "movable": ob.movable,
                    **JsonSerializer.shape_to_dict(ob.shape),
                    "circles": JsonSerializer._cover_to_list(ob.cover),
                    "motion": ob.motion.value,
                    "weight": ob.weight,
                }
                for ob in scenario.obstacles
            ],
            "planner": JsonSerializer.planner_to_dict(scenario.planner),
        }

    @staticmethod
    def planner_from_dict(data: Dict[str, Any], locator: Optional[_Locator] = None) -> PlannerConfig:
        locator = locator or _Locator(None)
        defaults = PlannerConfig()
        weights_data = data.get("weights", {})
        reference = data.get("state_reference")
        if isinstance(reference, list):
            reference = _triple(reference, "state_reference", locator)
        try:
            weights = Weights(
                Mx=float(weights_data.get("Mx", defaults.weights.Mx)),
                Mi=float(weights_data.get("Mi", defaults.weights.Mi)),
                Mu=float(weights_data.get("Mu", defaults.weights.Mu)),
                Mg=float(weights_data.get("Mg", defaults.weights.Mg)),
            )
            mode = OverlapCostMode(
                kind=CostKind(data.get("mode", defaults.mode.kind.value)),
                eta0=float(data.get("eta", defaults.mode.eta0)),
                epsilon=float(data.get("epsilon", defaults.mode.epsilon)),
            )
            return PlannerConfig(
                horizon=int(data.get("horizon", defaults.horizon)),
                max_steps=int(data.get("max_steps", defaults.max_steps)),
                goal_tolerance=float(data.get("goal_tolerance", defaults.goal_tolerance)),
                weights=weights,
                mode=mode,
                state_reference=reference,
                wall_weight=float(data.get("wall_weight", defaults.wall_weight)),
            )
        except (TypeError, ValueError) as e:
            raise ValidationError(str(e), field="planner", line=locator.key("planner")) from e

    @staticmethod
    def _robot_from_dict(data: Dict[str, Any], strict: bool, locator: _Locator) -> RobotSpec:
        if not isinstance(data, dict):
            raise ParseError("Robot must be a JSON object", field="robot", line=locator.key("robot"))
        try:
            model = DynamicsModel(
                kind=_require(data, "model", "robot", locator),
                control_lower=_triple(data.get("control_lower"), "control_lower", locator),
                control_upper=_triple(data.get("control_upper"), "control_upper", locator),
                dt=float(data.get("dt", 0.1)),
            )
        except ValueError as e:
            if isinstance(e, ScenarioError):
                raise
            raise ValidationError(str(e), field="robot", line=locator.key("robot")) from e
        polygons = tuple(
            JsonSerializer._polygon_from_coords(
                coords, f"robot.polygons[{i}]", strict, line=locator.key("polygons")
            )
            for i, coords in enumerate(data.get("polygons", []))
        )
        circles = data.get("circles") or []
        if circles:
            cover = CircleCover(
                tuple(
                    JsonSerializer._circle_from_dict(c, f"robot.circles[{i}]")
                    for i, c in enumerate(circles)
                )
            )
        elif polygons:
            cover = CircleCover(tuple(c for p in polygons for c in default_cover(p).circles))
        else:
            raise ValidationError(
                "Robot needs polygons or circles", field="robot", line=locator.key("robot")
            )
        start = RobotState(*_triple(_require(data, "start", "robot", locator), "start", locator))
        goal = RobotState(*_triple(_require(data, "goal", "robot", locator), "goal", locator))
        return RobotSpec(model, polygons, cover, start, goal)

    @staticmethod
    def _obstacle_from_dict(data: Dict[str, Any], strict: bool, locator: _Locator) -> ObstacleSpec:
        if not isinstance(data, dict) or "id" not in data:
            raise ParseError("Obstacle needs an 'id'", field="obstacles")
        obstacle_id = str(data["id"])
        line = locator.obstacle(obstacle_id)
        if "polygon" in data:
            shape: Shape = JsonSerializer._polygon_from_coords(
                data["polygon"], "polygon", strict, obstacle_id, line
            )
        elif "circle" in data:
            shape = JsonSerializer._circle_from_dict(data["circle"], "circle", obstacle_id)
        else:
            raise ParseError(
                "Obstacle needs a 'polygon' or a 'circle'", obstacle_id=obstacle_id, line=line
            )
        cover = None
        if data.get("circles"):
            cover = CircleCover(
                tuple(
                    JsonSerializer._circle_from_dict(c, "circles", obstacle_id)
                    for c in data["circles"]
                )
            )
        try:
            return ObstacleSpec.create(
                obstacle_id,
                shape,
                cover=cover,
                movable=bool(data.get("movable", True)),
                motion=data.get("motion", "free"),
                weight=float(data.get("weight", 1.0)),
            )
        except ValueError as e:
            field = "weight" if "weight" in str(e) else "motion"
            raise ValidationError(str(e), field=field, obstacle_id=obstacle_id, line=line) from e

    @staticmethod
    def scenario_from_dict(
        data: Dict[str, Any], strict: bool = False, source: Optional[str] = None
    ) -> Scenario:
        locator = _Locator(source)
        _check_version(data, "scenario")
        domain_data = _require(data, "domain", "domain", locator)
        try:
            domain = DomainBounds(
                float(domain_data["xmin"]),
                float(domain_data["xmax"]),
                float(domain_data["ymin"]),
                float(domain_data["ymax"]),
            )
        except (KeyError, TypeError) as e:
            raise ParseError(f"Domain needs xmin, xmax, ymin, ymax: {e}", field="domain") from e
        except ValueError as e:
            raise ValidationError(str(e), field="domain", line=locator.key("domain")) from e

        robot = JsonSerializer._robot_from_dict(
            _require(data, "robot", "robot", locator), strict, locator
        )
        for name, state in (("start", robot.start), ("goal", robot.goal)):
            if not domain.contains(state.x, state.y):
                raise ValidationError(
                    f"Robot {name} ({state.x}, {state.y}) lies outside the domain",
                    field=name,
                    line=locator.key(name),
                )

        obstacles = tuple(
            JsonSerializer._obstacle_from_dict(o, strict, locator)
            for o in data.get("obstacles", [])
        )
        seen = set()
        for ob in obstacles:
            if ob.id in seen:
                raise ValidationError(
                    "Duplicate obstacle id", obstacle_id=ob.id, line=locator.obstacle(ob.id)
                )
            seen.add(ob.id)

        planner = JsonSerializer.planner_from_dict(data.get("planner", {}), locator)
        return Scenario(str(data.get("name", "scenario")), domain, robot, obstacles, planner)

    @staticmethod
    def scenario_from_json(text: str, strict: bool = False) -> Scenario:
        return JsonSerializer.scenario_from_dict(_parse_json(text, "scenario"), strict, text)

    @staticmethod
    def load_scenario(path: PathLike, strict: bool = False) -> Scenario:
        return JsonSerializer.scenario_from_json(_read(path), strict)

    # -- trajectories -------------------------------------------------------

    @staticmethod
    def trajectory_to_dict(trajectory: Trajectory) -> Dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "step_seconds": trajectory.step_seconds,
            "states": [
                {"t": t, "x": s.x, "y": s.y, "theta": s.theta}
                for t, s in zip(trajectory.times, trajectory.states)
            ],
            "controls": [list(u) for u in trajectory.controls],
        }

    @staticmethod
    def trajectory_from_dict(data: Dict[str, Any]) -> Trajectory:
        if isinstance(data, dict) and "trajectory" in data:
            data = data["trajectory"]
        _check_version(data, "trajectory")
        try:
            states = [RobotState(float(s["x"]), float(s["y"]), float(s["theta"])) for s in data["states"]]
            controls = [tuple(float(v) for v in u) for u in data.get("controls", [])]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed trajectory: {e}", field="trajectory") from e
        if not states:
            raise ValidationError("Trajectory has no states", field="states")
        if len(controls) != len(states) - 1:
            raise ValidationError(
                f"Trajectory has {len(states)} states but {len(controls)} controls",
                field="controls",
            )
        return Trajectory(states, controls, float(data.get("step_seconds", 0.1)))

    @staticmethod
    def load_trajectory(path: PathLike) -> Trajectory:
        return JsonSerializer.trajectory_from_dict(_parse_json(_read(path), "trajectory"))

    # -- reports ------------------------------------------------------------

    @staticmethod
    def solution_to_dict(solution: DisplacementSolution) -> Dict[str, Any]:
        return {
            "id": solution.obstacle_id,
            "before": JsonSerializer.shape_to_dict(solution.before),
            "after": JsonSerializer.shape_to_dict(solution.new_shape),
            "centroid_shift": solution.centroid_shift,
            "rotation": solution.rotation,
            "objective": solution.objective_value,
            "feasible": solution.feasible,
        }

    @staticmethod
    def solution_from_dict(data: Dict[str, Any]) -> DisplacementSolution:
        return DisplacementSolution(
            obstacle_id=str(data["id"]),
            before=JsonSerializer.shape_from_dict(data["before"]),
            new_shape=JsonSerializer.shape_from_dict(data["after"]),
            centroid_shift=float(data["centroid_shift"]),
            rotation=float(data["rotation"]),
            objective_value=float(data["objective"]),
            feasible=bool(data["feasible"]),
        )

    @staticmethod
    def report_to_dict(report: RunReport, include_timings: bool = False) -> Dict[str, Any]:
        """
        Report as a dict. Stage timings are omitted unless `include_timings`,
        which keeps reruns byte-identical.
        """
        metrics: Dict[str, Any] = {
            "total_displacement_magnitude": report.metrics.total_displacement_magnitude,
            "displaced_count": report.metrics.displaced_count,
        }
        if include_timings:
            metrics["overlap_stage_seconds"] = report.metrics.overlap_stage_seconds
            metrics["displacement_stage_seconds"] = report.metrics.displacement_stage_seconds
        overlap = report.overlap
        return {
            "version": FORMAT_VERSION,
            "status": report.status,
            "goal_reached": report.goal_reached,
            "scenario": JsonSerializer.scenario_to_dict(report.scenario),
            "trajectory": JsonSerializer.trajectory_to_dict(report.trajectory),
            "overlap": {
                "obstacle_ids": list(overlap.obstacle_ids),
                "per_step": np.asarray(overlap.per_step_per_obstacle, dtype=float).tolist(),
                "eta_state": dict(sorted(overlap.eta_state.items())),
            },
            "solutions": [JsonSerializer.solution_to_dict(s) for s in report.solutions],
            "metrics": metrics,
            "unresolved_ids": list(report.unresolved_ids),
            "certificate": {
                "passed": not report.certificate_violations,
                "violations": [[oid, sample] for oid, sample in report.certificate_violations],
            },
        }

    @staticmethod
    def report_from_dict(data: Dict[str, Any]) -> RunReport:
        _check_version(data, "report")
        try:
            scenario = JsonSerializer.scenario_from_dict(data["scenario"])
            overlap_data = data["overlap"]
            ids = list(overlap_data["obstacle_ids"])
            matrix = np.asarray(overlap_data["per_step"], dtype=float)
            if matrix.ndim != 2:
                matrix = matrix.reshape(-1, len(ids)) if ids else np.zeros((0, 0))
            metrics_data = data["metrics"]
            metrics = RunMetrics(
                total_displacement_magnitude=float(metrics_data["total_displacement_magnitude"]),
                displaced_count=int(metrics_data["displaced_count"]),
                overlap_stage_seconds=float(metrics_data.get("overlap_stage_seconds", 0.0)),
                displacement_stage_seconds=float(
                    metrics_data.get("displacement_stage_seconds", 0.0)
                ),
            )
            return RunReport(
                scenario=scenario,
                trajectory=JsonSerializer.trajectory_from_dict(data["trajectory"]),
                overlap=OverlapReport(ids, matrix, dict(overlap_data.get("eta_state", {}))),
                solutions=[JsonSerializer.solution_from_dict(s) for s in data["solutions"]],
                metrics=metrics,
                goal_reached=bool(data.get("goal_reached", True)),
                unresolved_ids=list(data.get("unresolved_ids", [])),
                certificate_violations=[
                    (str(oid), int(sample))
                    for oid, sample in data.get("certificate", {}).get("violations", [])
                ],
            )
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ParseError(f"Malformed report: missing or invalid {e}") from e

    @staticmethod
    def timings_to_dict(report: RunReport) -> Dict[str, Any]:
        """Wall-clock stage timings, written next to the report."""
        return {
            "version": FORMAT_VERSION,
            "scenario": report.scenario.name,
            "overlap_stage_seconds": report.metrics.overlap_stage_seconds,
            "displacement_stage_seconds": report.metrics.displacement_stage_seconds,
        }

    @staticmethod
    def to_json(data: Dict[str, Any], indent: int = 2) -> str:
        return json.dumps(data, indent=indent) + "\n"

    @staticmethod
    def save_report(report: RunReport, path: PathLike, include_timings: bool = False) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(JsonSerializer.to_json(JsonSerializer.report_to_dict(report, include_timings)))
        return path

    @staticmethod
    def load_report(path: PathLike) -> RunReport:
        return JsonSerializer.report_from_dict(_parse_json(_read(path), "report"))

    @staticmethod
    def load_document(path: PathLike, what: str) -> Dict[str, Any]:
        """A versioned JSON document (suite files and the like)."""
        data = _parse_json(_read(path), what)
        _check_version(data, what)
        return data

    @staticmethod
    def save_json(data: Dict[str, Any], path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(JsonSerializer.to_json(data))
        return path
