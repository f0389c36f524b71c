import json
import logging

import numpy as np
import pytest

from cdplan.core.errors import ParseError, ValidationError
from cdplan.core.geometry import Circle, ConvexPolygon
from cdplan.core.ir import (
    DisplacementSolution,
    OverlapReport,
    RobotState,
    RunMetrics,
    RunReport,
    Trajectory,
)
from cdplan.core.serialization import JsonSerializer
from cdplan.scenarios import get_scenario

MINIMAL = """{
  "version": 1,
  "name": "mini",
  "domain": {"xmin": 0, "xmax": 4, "ymin": -1, "ymax": 1},
  "robot": {
    "model": "planar_velocity",
    "control_lower": [-1, -1, -1],
    "control_upper": [1, 1, 1],
    "circles": [{"cx": 0, "cy": 0, "r": 0.2}],
    "start": [0.5, 0, 0],
    "goal": [3.5, 0, 0]
  },
  "obstacles": [
    {"id": "box", "polygon": [[1.8, -0.2], [2.2, -0.2], [2.2, 0.2], [1.8, 0.2]]},
    {"id": "post", "circle": {"cx": 1.0, "cy": 0.6, "r": 0.1}, "movable": false}
  ]
}
"""


def minimal(**changes) -> dict:
    data = json.loads(MINIMAL)
    for path, value in changes.items():
        target = data
        keys = path.split("__")
        for key in keys[:-1]:
            target = target[int(key)] if key.isdigit() else target[key]
        target[keys[-1]] = value
    return data


class TestScenarioLoading:
    def test_minimal_file_gets_defaults(self, tmp_path):
        path = tmp_path / "mini.json"
        path.write_text(MINIMAL)
        scenario = JsonSerializer.load_scenario(path)

        assert scenario.name == "mini"
        assert scenario.planner.horizon == 21
        assert scenario.planner.mode.kind.value == "mcd"
        box = scenario.obstacle("box")
        assert box.movable and box.weight == 1.0 and box.motion.value == "free"
        assert len(box.cover.circles) == 1
        assert scenario.obstacle("post").movable is False

    def test_bundled_scenarios_survive_a_round_trip(self):
        for name in ("corridor", "roomba", "two_rooms"):
            data = JsonSerializer.scenario_to_dict(get_scenario(name))
            again = JsonSerializer.scenario_to_dict(JsonSerializer.scenario_from_dict(data))
            assert again == data

    def test_start_outside_domain(self):
        text = json.dumps(minimal(robot__start=[5.0, 0.0, 0.0]), indent=2)
        with pytest.raises(ValidationError) as info:
            JsonSerializer.scenario_from_json(text)
        assert info.value.field == "start"
        assert info.value.line is not None

    def test_clockwise_polygon_is_reversed_with_warning(self, caplog):
        data = minimal(obstacles__0__polygon=[[1.8, -0.2], [1.8, 0.2], [2.2, 0.2], [2.2, -0.2]])
        with caplog.at_level(logging.WARNING, logger="cdplan"):
            scenario = JsonSerializer.scenario_from_dict(data)
        assert "clockwise" in caplog.text
        assert scenario.obstacle("box").shape.area == pytest.approx(0.16)

    def test_clockwise_polygon_rejected_when_strict(self):
        data = minimal(obstacles__0__polygon=[[1.8, -0.2], [1.8, 0.2], [2.2, 0.2], [2.2, -0.2]])
        with pytest.raises(ValidationError) as info:
            JsonSerializer.scenario_from_dict(data, strict=True)
        assert info.value.obstacle_id == "box"

    def test_non_convex_polygon(self):
        data = minimal(obstacles__0__polygon=[[0, 0], [2, 0], [1, 0.2], [2, 2], [0, 2]])
        with pytest.raises(ValidationError) as info:
            JsonSerializer.scenario_from_dict(data)
        assert info.value.obstacle_id == "box"

    def test_bad_weight_names_obstacle_and_line(self):
        text = json.dumps(minimal(obstacles__0__weight=-1.0), indent=2)
        with pytest.raises(ValidationError) as info:
            JsonSerializer.scenario_from_json(text)
        assert info.value.obstacle_id == "box"
        assert info.value.field == "weight"
        assert '"box"' in text.splitlines()[info.value.line - 1]

    def test_duplicate_ids(self):
        data = minimal(obstacles__1__id="box")
        with pytest.raises(ValidationError) as info:
            JsonSerializer.scenario_from_dict(data)
        assert info.value.obstacle_id == "box"

    def test_invalid_json_reports_line(self):
        with pytest.raises(ParseError) as info:
            JsonSerializer.scenario_from_json('{\n  "version": 1,\n  "name": \n}')
        assert info.value.line == 4

    def test_unsupported_version(self):
        with pytest.raises(ParseError):
            JsonSerializer.scenario_from_dict(minimal(version=2))

    def test_missing_robot(self):
        data = minimal()
        del data["robot"]
        with pytest.raises(ParseError) as info:
            JsonSerializer.scenario_from_dict(data)
        assert info.value.field == "robot"

    def test_robot_must_be_an_object(self):
        with pytest.raises(ParseError) as info:
            JsonSerializer.scenario_from_dict(minimal(robot=[1, 2, 3]))
        assert info.value.field == "robot"

    def test_unknown_mode(self):
        with pytest.raises(ValidationError):
            JsonSerializer.scenario_from_dict(minimal(planner={"mode": "fastest"}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            JsonSerializer.load_scenario(tmp_path / "absent.json")


class TestTrajectories:
    def test_controls_must_match_states(self):
        data = {
            "version": 1,
            "states": [{"t": 0, "x": 0, "y": 0, "theta": 0}, {"t": 0.1, "x": 0.1, "y": 0, "theta": 0}],
            "controls": [],
        }
        with pytest.raises(ValidationError):
            JsonSerializer.trajectory_from_dict(data)

    def test_empty_trajectory(self):
        with pytest.raises(ValidationError):
            JsonSerializer.trajectory_from_dict({"version": 1, "states": [], "controls": []})

    def test_reads_the_trajectory_inside_a_report(self):
        trajectory = Trajectory([RobotState(0, 0), RobotState(0.1, 0)], [(1.0, 0.0, 0.0)], 0.1)
        data = {"version": 1, "trajectory": JsonSerializer.trajectory_to_dict(trajectory)}
        loaded = JsonSerializer.trajectory_from_dict(data)
        assert loaded.states == trajectory.states
        assert loaded.controls == trajectory.controls


def _report() -> RunReport:
    scenario = get_scenario("corridor")
    trajectory = Trajectory(
        [RobotState(0.4, 0.0), RobotState(0.5, 0.0), RobotState(0.6, 0.01)],
        [(1.0, 0.0, 0.0), (1.0, 0.1, 0.0)],
        0.1,
    )
    ids = [o.id for o in scenario.obstacles]
    overlap = OverlapReport(ids, np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    block = scenario.obstacle("block").shape
    moved = ConvexPolygon.rectangle(0.4, 0.4, 2.0, 0.5)
    solutions = [
        DisplacementSolution("block", block, moved, 0.5, 0.0, 1.0, True),
        DisplacementSolution("upper", Circle.at(2, 0.65, 0.3), Circle.at(2, 0.65, 0.3), 0.0, 0.0, 0.0, False),
    ]
    return RunReport(
        scenario,
        trajectory,
        overlap,
        solutions,
        RunMetrics(0.5, 1, overlap_stage_seconds=1.25, displacement_stage_seconds=0.5),
        goal_reached=True,
        unresolved_ids=["upper"],
    )


class TestReports:
    def test_round_trip(self, tmp_path):
        report = _report()
        path = JsonSerializer.save_report(report, tmp_path / "out" / "report.json")
        loaded = JsonSerializer.load_report(path)
        assert JsonSerializer.report_to_dict(loaded) == JsonSerializer.report_to_dict(report)
        assert loaded.status == "infeasible"

    def test_timings_left_out_by_default(self, tmp_path):
        path = JsonSerializer.save_report(_report(), tmp_path / "report.json")
        metrics = json.loads(path.read_text())["metrics"]
        assert "overlap_stage_seconds" not in metrics
        timed = JsonSerializer.report_to_dict(_report(), include_timings=True)["metrics"]
        assert timed["overlap_stage_seconds"] == 1.25

    def test_reruns_are_byte_identical(self, tmp_path):
        a = JsonSerializer.save_report(_report(), tmp_path / "a.json")
        b = JsonSerializer.save_report(_report(), tmp_path / "b.json")
        assert a.read_bytes() == b.read_bytes()

    def test_timings_sidecar(self):
        timings = JsonSerializer.timings_to_dict(_report())
        assert timings["scenario"] == "corridor"
        assert timings["displacement_stage_seconds"] == 0.5

    def test_report_without_obstacles(self):
        report = _report()
        data = JsonSerializer.report_to_dict(report)
        data["overlap"] = {"obstacle_ids": [], "per_step": [[], [], []]}
        loaded = JsonSerializer.report_from_dict(data)
        assert loaded.overlap.overlapped_ids == frozenset()

    def test_malformed_report(self):
        with pytest.raises(ParseError):
            JsonSerializer.report_from_dict({"version": 1, "status": "ok"})

    def test_bad_metric_value_is_a_parse_error(self):
        data = JsonSerializer.report_to_dict(_report())
        data["metrics"]["displaced_count"] = "seven"
        with pytest.raises(ParseError):
            JsonSerializer.report_from_dict(data)

    def test_invalid_scenario_inside_a_report_keeps_its_error(self):
        data = JsonSerializer.report_to_dict(_report())
        data["scenario"]["obstacles"][0]["weight"] = -1.0
        with pytest.raises(ValidationError):
            JsonSerializer.report_from_dict(data)
