"""
Tests for the CLI module.
"""

import json

import pytest

from cdplan.cli import main
from cdplan.core.serialization import JsonSerializer
from scenes import straight_trajectory


@pytest.fixture
def scene_files(tmp_path, blocked_scene):
    scenario = JsonSerializer.save_json(
        JsonSerializer.scenario_to_dict(blocked_scene), tmp_path / "scene.json"
    )
    trajectory = JsonSerializer.save_json(
        JsonSerializer.trajectory_to_dict(straight_trajectory()), tmp_path / "trajectory.json"
    )
    return scenario, trajectory


@pytest.fixture
def resolved(tmp_path, scene_files):
    """Output directory of a successful `resolve` run."""
    scenario, trajectory = scene_files
    out = tmp_path / "resolved"
    code = main(
        ["resolve", "--scenario", str(scenario), "--trajectory", str(trajectory), "--out", str(out)]
    )
    assert code == 0
    return out


class TestArguments:
    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "plan" in capsys.readouterr().out

    def test_unknown_command(self):
        assert main(["fly"]) == 1

    def test_bad_mode(self):
        assert main(["plan", "--scenario", "builtin:gap", "--out", "x", "--mode", "fastest"]) == 1

    def test_missing_required(self):
        assert main(["check"]) == 1


class TestPlan:
    def test_gap_writes_report_timings_and_svg(self, tmp_path, capsys):
        assert main(["plan", "--scenario", "builtin:gap", "--out", str(tmp_path)]) == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["report.json", "timings.json", "trajectory.svg"]
        assert "gap: ok" in capsys.readouterr().err
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["certificate"]["passed"] is True
        assert "overlap_stage_seconds" not in report["metrics"]

    def test_invalid_scenario(self, tmp_path, scene_files, capsys):
        scenario, _ = scene_files
        data = json.loads(scenario.read_text())
        data["obstacles"][0]["weight"] = -2.0
        scenario.write_text(json.dumps(data))
        assert main(["plan", "--scenario", str(scenario), "--out", str(tmp_path / "o")]) == 2
        assert "weight" in capsys.readouterr().err

    def test_missing_scenario_file(self, tmp_path):
        code = main(["plan", "--scenario", str(tmp_path / "absent.json"), "--out", str(tmp_path)])
        assert code == 1

    def test_unknown_builtin(self, tmp_path):
        assert main(["plan", "--scenario", "builtin:nowhere", "--out", str(tmp_path)]) == 2


class TestResolveCheckRender:
    def test_resolve_outputs(self, resolved):
        report = JsonSerializer.load_report(resolved / "report.json")
        assert report.status == "ok"
        assert report.metrics.displaced_count == 1

    def test_resolve_is_deterministic(self, tmp_path, scene_files, resolved):
        scenario, trajectory = scene_files
        again = tmp_path / "again"
        main(["resolve", "--scenario", str(scenario), "--trajectory", str(trajectory), "--out", str(again)])
        for name in ("report.json", "trajectory.svg"):
            assert (again / name).read_bytes() == (resolved / name).read_bytes()

    def test_check_passes(self, resolved, capsys):
        assert main(["check", "--report", str(resolved / "report.json")]) == 0
        assert "certificate passed" in capsys.readouterr().out

    def test_check_catches_tampering(self, resolved, capsys):
        path = resolved / "report.json"
        data = json.loads(path.read_text())
        data["metrics"]["displaced_count"] = 7
        path.write_text(json.dumps(data))
        assert main(["check", "--report", str(path)]) == 4
        assert "displaced count" in capsys.readouterr().err

    def test_check_catches_undone_displacement(self, resolved):
        path = resolved / "report.json"
        data = json.loads(path.read_text())
        solution = data["solutions"][0]
        solution["after"] = solution["before"]
        path.write_text(json.dumps(data))
        assert main(["check", "--report", str(path)]) == 4

    def test_render(self, resolved, tmp_path):
        svg = tmp_path / "drawing" / "run.svg"
        assert main(["render", "--report", str(resolved / "report.json"), "--svg", str(svg)]) == 0
        assert svg.read_bytes() == (resolved / "trajectory.svg").read_bytes()

    def test_resolve_with_fixed_obstacle_in_the_way(self, tmp_path, scene_files):
        scenario, trajectory = scene_files
        data = json.loads(scenario.read_text())
        data["obstacles"][0]["movable"] = False
        scenario.write_text(json.dumps(data))
        code = main(
            ["resolve", "--scenario", str(scenario), "--trajectory", str(trajectory), "--out", str(tmp_path / "o")]
        )
        assert code == 4


def test_bench_with_a_failing_cell(tmp_path, capsys):
    suite = tmp_path / "suite.json"
    suite.write_text(json.dumps({"version": 1, "cells": [{"name": "broken", "scenario": "builtin:nowhere"}]}))
    assert main(["bench", "--suite", str(suite), "--out", str(tmp_path / "bench")]) == 0
    assert (tmp_path / "bench" / "results.csv").is_file()
    assert "1 cell(s) failed" in capsys.readouterr().err
