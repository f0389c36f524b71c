import math

import numpy as np
import pytest

from cdplan.core.geometry import Circle, ConvexPolygon
from cdplan.core.ir import (
    DisplacementSolution,
    DomainBounds,
    DynamicsModel,
    ModelKind,
    MotionRestriction,
    ObstacleSpec,
    OverlapCostMode,
    OverlapReport,
    PlannerConfig,
    RobotState,
    RunReport,
    Scenario,
    Trajectory,
    Weights,
    default_cover,
    wrap_angle,
)
from scenes import circle_robot


class TestWrapAngle:
    def test_in_range_unchanged(self):
        for theta in (0.0, 1.0, -3.0, math.pi):
            assert wrap_angle(theta) == theta

    def test_minus_pi_maps_to_pi(self):
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)

    def test_full_turns(self):
        assert wrap_angle(2 * math.pi) == pytest.approx(0.0, abs=1e-12)
        assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-7.0) == pytest.approx(-7.0 + 2 * math.pi)

    def test_range(self):
        for theta in np.linspace(-20, 20, 401):
            wrapped = wrap_angle(float(theta))
            assert -math.pi < wrapped <= math.pi
            assert math.isclose(math.cos(wrapped), math.cos(theta), abs_tol=1e-9)
            assert math.isclose(math.sin(wrapped), math.sin(theta), abs_tol=1e-9)


def test_robot_state_wraps_heading():
    assert RobotState(0.0, 0.0, 2 * math.pi).theta == pytest.approx(0.0, abs=1e-12)


def test_dynamics_model_validation():
    with pytest.raises(ValueError):
        DynamicsModel(ModelKind.PLANAR_VELOCITY, (-1, -1, -1), (1, 1, 1), dt=0.0)
    with pytest.raises(ValueError):
        DynamicsModel(ModelKind.PLANAR_VELOCITY, (1, -1, -1), (0, 1, 1))
    with pytest.raises(ValueError):
        DynamicsModel("bicycle", (-1, -1, -1), (1, 1, 1))


def test_step_seconds():
    planar = DynamicsModel(ModelKind.PLANAR_VELOCITY, (-1, -1, -1), (1, 1, 1), dt=0.2)
    discrete = DynamicsModel(ModelKind.DOWN_CROSS_TURN, (-1, -1, -1), (1, 1, 1), dt=0.2)
    assert planar.step_seconds == 0.2
    assert discrete.step_seconds == 1.0


def test_domain_bounds():
    with pytest.raises(ValueError):
        DomainBounds(1.0, 0.0, 0.0, 1.0)
    domain = DomainBounds(0.0, 1.0, 0.0, 1.0)
    assert domain.contains(1.0, 0.5)
    assert not domain.contains(1.1, 0.5)


def test_weights_must_be_non_negative():
    with pytest.raises(ValueError):
        Weights(Mi=-0.1)
    with pytest.raises(ValueError):
        Weights(Mg=float("inf"))


def test_cost_mode_validation():
    assert OverlapCostMode("mcr").kind.value == "mcr"
    with pytest.raises(ValueError):
        OverlapCostMode(eta0=0.0)


class TestPlannerConfig:
    def test_defaults(self):
        config = PlannerConfig()
        assert config.horizon == 21
        assert config.weights.Mx == 0.0
        assert config.mode.eta0 == 100.0
        assert config.mode.epsilon == 1e-3

    def test_horizon_must_be_positive(self):
        with pytest.raises(ValueError):
            PlannerConfig(horizon=0)

    def test_bad_reference(self):
        with pytest.raises(ValueError):
            PlannerConfig(state_reference="start")

    def test_reference_state(self):
        goal = RobotState(1.0, 2.0, 0.5)
        assert np.array_equal(PlannerConfig().reference_state(goal), np.zeros(3))
        assert np.array_equal(
            PlannerConfig(state_reference="goal").reference_state(goal), [1.0, 2.0, 0.5]
        )
        assert np.array_equal(
            PlannerConfig(state_reference=(3.0, 0.0, 0.0)).reference_state(goal), [3.0, 0.0, 0.0]
        )


class TestObstacleSpec:
    def test_circle_cover_is_itself(self):
        ob = ObstacleSpec.create("c", Circle.at(1, 2, 0.5))
        assert ob.cover.circles == (Circle.at(1, 2, 0.5),)
        assert ob.is_circle

    def test_elongated_box_gets_more_circles(self):
        assert len(default_cover(ConvexPolygon.rectangle(4.0, 1.0)).circles) == 4
        assert len(default_cover(ConvexPolygon.rectangle(4.0, 2.0)).circles) == 2
        assert len(default_cover(ConvexPolygon.rectangle(1.0, 1.0)).circles) == 1

    def test_weight_must_be_positive(self):
        with pytest.raises(ValueError):
            ObstacleSpec.create("c", Circle.at(0, 0, 1), weight=0.0)

    def test_motion_from_string(self):
        ob = ObstacleSpec.create("c", Circle.at(0, 0, 1), motion="translate_only")
        assert ob.motion == MotionRestriction.TRANSLATE_ONLY

    def test_unknown_motion(self):
        with pytest.raises(ValueError):
            ObstacleSpec.create("c", Circle.at(0, 0, 1), motion="slide")


def test_scenario_rejects_duplicate_ids():
    obstacles = (
        ObstacleSpec.create("a", Circle.at(0, 0, 1)),
        ObstacleSpec.create("a", Circle.at(3, 0, 1)),
    )
    with pytest.raises(ValueError):
        Scenario("dup", DomainBounds(0, 1, 0, 1), circle_robot(), obstacles)


def test_scenario_lookup():
    obstacles = (
        ObstacleSpec.create("a", Circle.at(0, 0, 1)),
        ObstacleSpec.create("wall", Circle.at(3, 0, 1), movable=False),
    )
    scenario = Scenario("s", DomainBounds(-5, 5, -5, 5), circle_robot(), obstacles)
    assert scenario.obstacle("wall").movable is False
    assert [o.id for o in scenario.movable_obstacles] == ["a"]
    with pytest.raises(KeyError):
        scenario.obstacle("missing")


def test_trajectory_times():
    states = [RobotState(0, 0), RobotState(1, 0), RobotState(2, 0)]
    trajectory = Trajectory(states, [(1, 0, 0), (1, 0, 0)], 0.5)
    assert trajectory.times == [0.0, 0.5, 1.0]
    assert len(trajectory) == 2


def test_overlap_report_summaries():
    report = OverlapReport(["a", "b", "c"], np.array([[0.0, 0.2, 0.0], [0.0, 0.1, 0.3]]))
    assert report.overlapped_ids == frozenset({"b", "c"})
    assert report.total_overlap == pytest.approx(0.6)
    assert OverlapReport([], np.zeros((0, 0))).overlapped_ids == frozenset()


class TestRunReportStatus:
    def make(self, **kwargs) -> RunReport:
        scenario = Scenario("s", DomainBounds(-5, 5, -5, 5), circle_robot(), ())
        trajectory = Trajectory([RobotState(0, 0)], [], 0.1)
        return RunReport(scenario, trajectory, OverlapReport([], np.zeros((1, 0))), **kwargs)

    def test_ok(self):
        assert self.make().status == "ok"

    def test_goal_not_reached(self):
        assert self.make(goal_reached=False).status == "goal_not_reached"

    def test_unresolved_is_infeasible(self):
        assert self.make(unresolved_ids=["a"], goal_reached=False).status == "infeasible"

    def test_certificate_violation_is_infeasible(self):
        assert self.make(certificate_violations=[("a", 3)]).status == "infeasible"

    def test_displaced_shapes_skips_infeasible(self):
        before = Circle.at(0, 0, 1)
        solutions = [
            DisplacementSolution("a", before, Circle.at(1, 0, 1), 1.0, 0.0, 2.0, True),
            DisplacementSolution("b", before, Circle.at(2, 0, 1), 2.0, 0.0, 4.0, False),
        ]
        assert self.make(solutions=solutions).displaced_shapes() == {"a": Circle.at(1, 0, 1)}
