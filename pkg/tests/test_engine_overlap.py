import math

import numpy as np
import pytest

from cdplan.core.errors import GoalNotReached
from cdplan.core.geometry import Circle, CircleCover, ConvexPolygon, penetration_depth
from cdplan.core.ir import (
    CostKind,
    DomainBounds,
    DynamicsModel,
    ModelKind,
    ObstacleSpec,
    OverlapCostMode,
    PlannerConfig,
    RobotSpec,
    RobotState,
    Scenario,
    Weights,
)
from cdplan.engine import dynamics
from cdplan.engine.overlap import (
    HorizonCost,
    OverlapPlanner,
    overlap_penalty,
    overlap_report,
    plan_horizon,
    stage_cost,
    terminal_cost,
)
from cdplan.scenarios import corridor
from scenes import planar_model, scene

UNIT_ROBOT = CircleCover((Circle.at(0.0, 0.0, 1.0),))
ORIGIN = RobotState(0.0, 0.0, 0.0)
STILL = (0.0, 0.0, 0.0)


def obstacle_at(x, y, r=1.0, **kwargs) -> ObstacleSpec:
    return ObstacleSpec.create("o", Circle.at(x, y, r), **kwargs)


class TestStageCost:
    def test_nothing_to_pay(self):
        cost = stage_cost(
            ORIGIN, STILL, UNIT_ROBOT, [obstacle_at(5, 0)], Weights(Mx=0), OverlapCostMode()
        )
        assert cost == 0.0

    def test_mcd_is_squared_depth(self):
        cost = stage_cost(
            ORIGIN, STILL, UNIT_ROBOT, [obstacle_at(0, 1.5)], Weights(Mx=0, Mi=0.5), OverlapCostMode("mcd")
        )
        assert cost == pytest.approx(0.125)

    def test_mcr_saturates(self):
        cost = stage_cost(
            ORIGIN,
            STILL,
            UNIT_ROBOT,
            [obstacle_at(0, 1)],
            Weights(Mx=0, Mi=1.0, Mu=0),
            OverlapCostMode("mcr"),
            eta_state={"o": 100.0},
        )
        assert cost == pytest.approx((100.0 * 1.0 / (1.0 + 1e-3)) ** 2, rel=1e-12)

    def test_mcr_free_after_first_contact(self):
        cost = stage_cost(
            ORIGIN,
            STILL,
            UNIT_ROBOT,
            [obstacle_at(0, 1)],
            Weights(Mx=0, Mi=1.0),
            OverlapCostMode("mcr"),
            eta_state={"o": 0.0},
        )
        assert cost == 0.0

    def test_shortest_ignores_movable(self):
        cost = stage_cost(
            ORIGIN, STILL, UNIT_ROBOT, [obstacle_at(0, 1)], Weights(Mx=0), OverlapCostMode("shortest")
        )
        assert cost == 0.0

    def test_fixed_obstacle_uses_wall_weight(self):
        cost = stage_cost(
            ORIGIN,
            STILL,
            UNIT_ROBOT,
            [obstacle_at(0, 1.5, movable=False)],
            Weights(Mx=0),
            OverlapCostMode("shortest"),
            wall_weight=1e4,
        )
        assert cost == pytest.approx(2500.0)

    def test_obstacle_weight_scales(self):
        heavy = obstacle_at(0, 1.5, weight=3.0)
        cost = stage_cost(ORIGIN, STILL, UNIT_ROBOT, [heavy], Weights(Mx=0, Mi=0.5), OverlapCostMode())
        assert cost == pytest.approx(0.375)

    def test_state_and_control_terms(self):
        x = RobotState(1.0, 2.0, 0.0)
        cost = stage_cost(
            x, (1.0, 0.0, 0.0), UNIT_ROBOT, [], Weights(Mx=2.0, Mu=0.1), OverlapCostMode(),
            reference=np.array([1.0, 0.0, 0.0]),
        )
        assert cost == pytest.approx(2.0 * 4.0 + 0.1)


def test_overlap_penalty_modes():
    assert overlap_penalty(0.3, OverlapCostMode("mcd"), 100.0) == 0.3
    assert overlap_penalty(0.0, OverlapCostMode("mcr"), 100.0) == 0.0
    assert overlap_penalty(1.0, OverlapCostMode("mcr"), 100.0) == pytest.approx(99.9000999)


class TestTerminalCost:
    def test_at_goal(self):
        assert terminal_cost(ORIGIN, ORIGIN, 10.0) == 0.0

    def test_full_turn_is_the_same_heading(self):
        assert terminal_cost(RobotState(0, 0, 2 * math.pi), ORIGIN, 10.0) == pytest.approx(0.0, abs=1e-20)

    def test_distance(self):
        assert terminal_cost(RobotState(1, 1, 0), ORIGIN, 10.0) == pytest.approx(20.0)

    def test_heading_difference_is_wrapped(self):
        cost = terminal_cost(RobotState(0, 0, 3.0), RobotState(0, 0, -3.0), 1.0)
        assert cost == pytest.approx((2 * math.pi - 6.0) ** 2)


def test_horizon_cost_matches_stage_sum():
    scenario = scene([ObstacleSpec.create("rock", Circle.at(1.2, 0.05, 0.3))])
    config = scenario.planner
    robot = scenario.robot
    x_k = RobotState(0.8, 0.0, 0.2)
    eta = {"rock": 100.0}
    cost = HorizonCost(robot.model, x_k, robot.goal, robot.cover, scenario.obstacles, config, eta)

    rng = np.random.default_rng(2)
    controls = rng.uniform(-1, 1, size=(config.horizon, 3))
    states = dynamics.rollout(robot.model, x_k, [tuple(u) for u in controls])
    reference = config.reference_state(robot.goal)
    expected = sum(
        stage_cost(
            states[i], controls[i], robot.cover, scenario.obstacles, config.weights,
            config.mode, eta, reference, config.wall_weight,
        )
        for i in range(config.horizon)
    )
    expected += terminal_cost(states[-1], robot.goal, config.weights.Mg)
    assert cost.value(controls.reshape(-1)) == pytest.approx(expected, rel=1e-9)


class TestPlanHorizon:
    def test_zero_bounds_give_zero_controls(self):
        model = DynamicsModel(ModelKind.PLANAR_VELOCITY, (0, 0, 0), (0, 0, 0))
        config = PlannerConfig(horizon=4)
        controls = plan_horizon(
            model, ORIGIN, config, [], {}, RobotState(1, 0, 0), UNIT_ROBOT
        )
        assert controls.shape == (4, 3)
        assert not np.any(controls)

    def test_controls_respect_bounds(self):
        model = planar_model(speed=0.5)
        config = PlannerConfig(horizon=5)
        controls = plan_horizon(model, ORIGIN, config, [], {}, RobotState(3, 2, 0), UNIT_ROBOT)
        assert np.all(controls >= -0.5) and np.all(controls <= 0.5)
        # Heads toward the goal.
        assert controls[0, 0] > 0 and controls[0, 1] > 0

    def test_shortest_ignores_movable_obstacles(self):
        model = planar_model()
        config = PlannerConfig(horizon=6, mode=OverlapCostMode("shortest"))
        goal = RobotState(2.0, 0.0, 0.0)
        small = CircleCover((Circle.at(0.0, 0.0, 0.2),))
        rock = [ObstacleSpec.create("rock", Circle.at(0.4, 0.0, 0.3))]
        with_rock = plan_horizon(model, ORIGIN, config, rock, {}, goal, small)
        without = plan_horizon(model, ORIGIN, config, [], {}, goal, small)
        assert np.array_equal(with_rock, without)


class TestPlanner:
    def test_already_at_goal(self):
        scenario = scene(start=(1.0, 0.0, 0.0), goal=(1.0, 0.0, 0.0))
        trajectory, report = OverlapPlanner(scenario).plan()
        assert len(trajectory.states) == 1
        assert trajectory.controls == []
        assert report.per_step_per_obstacle.shape == (1, 0)

    def test_corridor_trajectory(self, corridor_report):
        trajectory = corridor_report.trajectory
        model = corridor_report.scenario.robot.model
        assert dynamics.rollout(model, trajectory.states[0], trajectory.controls) == trajectory.states
        for u in trajectory.controls:
            dynamics.check_bounds(model, u)
        assert corridor_report.overlap.overlapped_ids

    def test_mcr_marks_contacted_obstacles(self):
        planner = OverlapPlanner(corridor(CostKind.MCR))
        try:
            _, report = planner.plan()
        except GoalNotReached as e:
            report = e.report
        assert set(planner.eta_state.values()) <= {0.0, 100.0}
        for obstacle_id in report.overlapped_ids:
            assert planner.eta_state[obstacle_id] == 0.0
        assert report.eta_state == planner.eta_state


def test_overlap_report_with_polygon_robot():
    body = ConvexPolygon.rectangle(0.6, 0.2)
    robot = RobotSpec(
        planar_model(), (body,), CircleCover((Circle.at(0, 0, 0.32),)), ORIGIN, RobotState(1, 0, 0)
    )
    rock = ObstacleSpec.create("rock", Circle.at(0.5, 0.0, 0.3))
    scenario = Scenario("poly", DomainBounds(-2, 2, -2, 2), robot, (rock,))
    report = overlap_report(scenario, [ORIGIN, RobotState(-1.0, 0.0, 0.0)])
    assert report.per_step_per_obstacle[0, 0] == pytest.approx(penetration_depth(body, rock.shape))
    assert report.per_step_per_obstacle[1, 0] == 0.0
    assert report.overlapped_ids == frozenset({"rock"})
