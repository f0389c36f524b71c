import math

import numpy as np
import pytest

from cdplan.core.errors import ControlOutOfBounds
from cdplan.core.geometry import Circle, CircleCover, ConvexPolygon
from cdplan.core.ir import DynamicsModel, ModelKind, RobotSpec, RobotState, wrap_angle
from cdplan.engine import dynamics
from scenes import circle_robot, planar_model


@pytest.fixture
def turning_model():
    return DynamicsModel(
        ModelKind.DOWN_CROSS_TURN, (-1.0, -1.0, -math.pi), (1.0, 1.0, math.pi), dt=1.0
    )


class TestStep:
    def test_planar_forward(self):
        x = dynamics.step(planar_model(), RobotState(0, 0, 0), (1.0, 0.0, 0.0))
        assert (x.x, x.y, x.theta) == pytest.approx((0.1, 0.0, 0.0))

    def test_planar_body_frame(self):
        x = dynamics.step(planar_model(), RobotState(0, 0, math.pi / 2), (1.0, 0.0, 0.0))
        assert x.x == pytest.approx(0.0, abs=1e-12)
        assert x.y == pytest.approx(0.1)

    def test_down_cross_turn_straight(self, turning_model):
        x = dynamics.step(turning_model, RobotState(0, 0, 0), (1.0, 0.0, 0.0))
        assert (x.x, x.y, x.theta) == pytest.approx((1.0, 0.0, 0.0))

    def test_down_cross_turn_sideways(self, turning_model):
        x = dynamics.step(turning_model, RobotState(0, 0, 0), (0.0, 1.0, 0.0))
        assert x.x == pytest.approx(0.0, abs=1e-12)
        assert x.y == pytest.approx(1.0)

    def test_down_cross_turn_half_heading(self, turning_model):
        x = dynamics.step(turning_model, RobotState(0, 0, 0), (1.0, 0.0, math.pi / 2))
        assert x.x == pytest.approx(math.cos(math.pi / 4))
        assert x.y == pytest.approx(math.sin(math.pi / 4))
        assert x.theta == pytest.approx(math.pi / 2)

    def test_heading_is_wrapped(self):
        x = dynamics.step(planar_model(turn=40.0), RobotState(0, 0, 3.0), (0.0, 0.0, 40.0))
        assert -math.pi < x.theta <= math.pi
        assert x.theta == pytest.approx(wrap_angle(7.0))

    def test_out_of_bounds(self):
        with pytest.raises(ControlOutOfBounds):
            dynamics.step(planar_model(), RobotState(0, 0, 0), (1.5, 0.0, 0.0))

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            dynamics.step(planar_model(), RobotState(0, 0, 0), (1.0, 0.0))


class TestRollout:
    def test_length_and_prefix(self):
        model = planar_model()
        controls = [(1.0, 0.0, 0.5), (0.5, 0.2, -0.1), (0.0, 1.0, 0.0)]
        states = dynamics.rollout(model, RobotState(1, 1, 0.3), controls)
        assert len(states) == 4
        assert states[0] == RobotState(1, 1, 0.3)
        assert dynamics.rollout(model, RobotState(1, 1, 0.3), controls[:2]) == states[:3]

    def test_empty_controls(self):
        assert dynamics.rollout(planar_model(), RobotState(1, 2, 0), []) == [RobotState(1, 2, 0)]

    @pytest.mark.parametrize("kind", [ModelKind.PLANAR_VELOCITY, ModelKind.DOWN_CROSS_TURN])
    def test_batch_matches_sequential(self, kind):
        model = DynamicsModel(kind, (-1, -1, -1), (1, 1, 1), dt=0.1)
        rng = np.random.default_rng(4)
        controls = rng.uniform(-1, 1, size=(5, 7, 3))
        x0 = RobotState(0.3, -0.2, 0.4)
        batch = dynamics.rollout_batch(model, x0.as_array(), controls)
        assert batch.shape == (5, 8, 3)
        for row, sequence in zip(batch, controls):
            states = dynamics.rollout(model, x0, [tuple(u) for u in sequence])
            for got, want in zip(row, states):
                assert got[0] == pytest.approx(want.x, abs=1e-12)
                assert got[1] == pytest.approx(want.y, abs=1e-12)
                assert wrap_angle(got[2]) == pytest.approx(want.theta, abs=1e-9)


def test_interpolation_takes_the_short_arc():
    a, b = RobotState(0, 0, 3.0), RobotState(1, 0, -3.0)
    mid = dynamics.interpolate_states(a, b, 0.5)
    assert mid.x == pytest.approx(0.5)
    assert abs(wrap_angle(mid.theta - math.pi)) < 1e-9


def test_interpolation_endpoints():
    a, b = RobotState(0, 0, 0.2), RobotState(2, 1, 0.6)
    assert dynamics.interpolate_states(a, b, 0.0) == a
    end = dynamics.interpolate_states(a, b, 1.0)
    assert (end.x, end.y, end.theta) == pytest.approx((2.0, 1.0, 0.6))


def test_footprint_is_rigid():
    square = ConvexPolygon.rectangle(1.0, 0.5, 0.2, 0.1)
    cover = CircleCover((Circle.at(0.3, 0.0, 0.4),))
    polygons, placed = dynamics.footprint_at(RobotState(2.0, -1.0, 1.1), [square], cover)
    assert polygons[0].area == pytest.approx(square.area)
    assert placed.circles[0].radius == 0.4
    c = placed.circles[0].center
    assert (c.x, c.y) == pytest.approx((2.0 + 0.3 * math.cos(1.1), -1.0 + 0.3 * math.sin(1.1)))


def test_robot_shapes_fall_back_to_cover():
    shapes = dynamics.robot_shapes_at(RobotState(1, 1, 0), circle_robot(0.3))
    assert shapes == [Circle.at(1.0, 1.0, 0.3)]


def test_robot_shapes_prefer_polygons():
    body = ConvexPolygon.rectangle(0.4, 0.2)
    robot = RobotSpec(
        planar_model(), (body,), CircleCover((Circle.at(0, 0, 0.3),)), RobotState(0, 0), RobotState(1, 0)
    )
    shapes = dynamics.robot_shapes_at(RobotState(1, 1, 0), robot)
    assert len(shapes) == 1 and isinstance(shapes[0], ConvexPolygon)


def test_zero_control_is_projected():
    model = DynamicsModel(ModelKind.PLANAR_VELOCITY, (0.2, -1, -1), (1, 1, 1))
    assert dynamics.zero_control(model) == (0.2, 0.0, 0.0)


def test_clip_controls():
    clipped = dynamics.clip_controls(planar_model(), np.array([[2.0, -3.0, 0.5]]))
    assert clipped.tolist() == [[1.0, -1.0, 0.5]]
