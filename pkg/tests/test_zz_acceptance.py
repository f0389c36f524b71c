"""
Whole-pipeline checks on the bundled scenes and randomized displacement problems.

These run every stage end to end and take minutes; run them with
`pytest -m slow -n auto`. The trend checks compare suite cells against each
other, not against fixed numbers: the bundled scenes are reconstructions.
"""

import math

import numpy as np
import pytest

from cdplan.core.errors import NoFeasibleInWindow, NoFeasibleSolutionFound, NoOverlap
from cdplan.core.geometry import Circle, polygon_centroid
from cdplan.core.ir import MotionRestriction
from cdplan.engine.displacement import DisplacementProblem, certify, displace
from cdplan.engine.oracle import oracle_grid_displacement
from cdplan.engine.pipeline import check_report, run_pipeline
from cdplan.engine.suite import PRESETS, run_experiment_suite
from cdplan.scenarios import SCENARIOS
from scenes import random_convex_polygon, random_scene

pytestmark = pytest.mark.slow


def path_witnesses(rng: np.random.Generator, count: int):
    """Robot discs along a horizontal line through the origin's neighbourhood."""
    y = rng.uniform(-0.2, 0.2)
    xs = np.linspace(-0.3, 0.3, count) if count > 1 else np.zeros(1)
    radius = rng.uniform(0.1, 0.25)
    return [Circle.at(float(x), y, radius) for x in xs]


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)


def signed_area(points: np.ndarray) -> float:
    nxt = np.roll(points, -1, axis=0)
    return float(np.sum(points[:, 0] * nxt[:, 1] - nxt[:, 0] * points[:, 1]) / 2.0)


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_bundled_scenarios_are_cleared(name):
    run = run_pipeline(SCENARIOS[name](), raise_on_failure=False)
    assert run.certificate_violations == []
    assert check_report(run) == []


def test_random_scenes_are_certified_or_reported():
    rng = np.random.default_rng(300)
    for index in range(100):
        run = run_pipeline(random_scene(rng, f"random{index}"), raise_on_failure=False)
        if run.status == "infeasible":
            assert run.unresolved_ids or run.certificate_violations
        else:
            assert run.certificate_violations == []
            assert check_report(run) == []


class TestRandomDisplacements:
    @pytest.mark.parametrize(
        "restriction, count",
        [
            (MotionRestriction.FREE, 200),
            (MotionRestriction.TRANSLATE_ONLY, 40),
            (MotionRestriction.ROTATE_ONLY, 40),
        ],
    )
    def test_rigid_motions(self, restriction, count):
        rng = np.random.default_rng(100)
        solved = 0
        for _ in range(count):
            obstacle = random_convex_polygon(rng, radius=0.4)
            witnesses = path_witnesses(rng, int(rng.integers(1, 4)))
            try:
                solution = displace(DisplacementProblem.create("o", obstacle, witnesses, restriction))
            except NoOverlap:
                continue
            except NoFeasibleSolutionFound as e:
                solution = e.best
            if solution is None:
                continue
            before = np.asarray(obstacle.array)
            after = np.asarray(solution.new_shape.array)
            assert pairwise_distances(after) == pytest.approx(pairwise_distances(before), rel=1e-6)
            # Congruent and not mirrored.
            assert signed_area(after) == pytest.approx(signed_area(before), rel=1e-6)
            shift = after - before
            if restriction == MotionRestriction.TRANSLATE_ONLY:
                assert np.ptp(shift, axis=0) == pytest.approx([0.0, 0.0], abs=1e-6)
            if restriction == MotionRestriction.ROTATE_ONLY:
                a, b = polygon_centroid(obstacle), polygon_centroid(solution.new_shape)
                assert math.hypot(b.x - a.x, b.y - a.y) < 1e-6
            solved += 1
        assert solved > count // 2

    def test_never_meaningfully_worse_than_the_grid(self):
        rng = np.random.default_rng(200)
        compared = 0
        for _ in range(50):
            obstacle = random_convex_polygon(rng, radius=0.3)
            witnesses = path_witnesses(rng, int(rng.integers(1, 4)))
            try:
                oracle = oracle_grid_displacement(
                    obstacle, witnesses, resolution=0.02, rotation_resolution=0.02, window=1.2
                )
            except NoFeasibleInWindow:
                continue
            try:
                problem = DisplacementProblem.create("o", obstacle, witnesses)
            except NoOverlap:
                continue
            solution = displace(problem)
            assert solution.feasible
            assert certify(solution.new_shape, witnesses)
            assert solution.objective_value <= oracle.objective + 0.05
            compared += 1
        assert compared >= 25


@pytest.fixture(scope="module")
def table1():
    return {row.cell: row for row in run_experiment_suite(PRESETS["table1"])}


@pytest.fixture(scope="module")
def table2():
    return {row.cell: row for row in run_experiment_suite(PRESETS["table2"])}


class TestTrends:
    def test_table1_cells_finish(self, table1):
        assert all(row.status != "error" for row in table1.values())

    def test_heavier_overlap_weight_moves_less(self, table1):
        light = table1["L21_Mi0.3"].total_displacement_magnitude
        heavy = table1["L21_Mi0.7"].total_displacement_magnitude
        assert heavy <= light * 0.99

    def test_shortest_moves_the_most(self, table1):
        assert table1["shortest"].total_displacement_magnitude >= table1[
            "L21_Mi0.7"
        ].total_displacement_magnitude

    def test_longer_horizon_is_not_worse(self, table1):
        short = table1["L11_Mi0.7"].total_displacement_magnitude
        long = table1["L21_Mi0.7"].total_displacement_magnitude
        assert long <= short * 1.05

    def test_removal_counts(self, table2):
        shortest = table2["shortest"].displaced_count
        light = table2["mcr_Mi0.5"].displaced_count
        heavy = table2["mcr_Mi0.7"].displaced_count
        assert heavy <= light
        assert max(light, heavy) <= shortest


def test_displacement_magnitudes_are_finite(table1):
    assert all(math.isfinite(row.total_displacement_magnitude) for row in table1.values())
