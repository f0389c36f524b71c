"""Robot state-transition models and forward simulation."""

import math
from typing import List, Sequence, Tuple

import numpy as np

from cdplan.core.errors import ControlOutOfBounds
from cdplan.core.geometry import (
    CircleCover,
    ConvexPolygon,
    transform_circle,
    transform_polygon,
)
from cdplan.core.ir import (
    Control,
    DynamicsModel,
    ModelKind,
    RobotSpec,
    RobotState,
    Shape,
    wrap_angle,
)


def check_bounds(model: DynamicsModel, u: Sequence[float]) -> None:
    for i, (value, lo, hi) in enumerate(zip(u, model.control_lower, model.control_upper)):
        if not lo <= value <= hi:
            raise ControlOutOfBounds(
                f"Control component {i} = {value} outside [{lo}, {hi}]"
            )


def step(model: DynamicsModel, x: RobotState, u: Sequence[float]) -> RobotState:
    """
    Advance one step.

    planar_velocity integrates the body-frame velocities with explicit Euler;
    down_cross_turn applies its discrete update directly.
    """
    if len(u) != 3:
        raise ValueError(f"Control must have 3 components, got {len(u)}")
    check_bounds(model, u)
    theta = x.theta
    if model.kind == ModelKind.PLANAR_VELOCITY:
        vx, vy, omega = u
        c, s = math.cos(theta), math.sin(theta)
        return RobotState(
            x.x + model.dt * (vx * c - vy * s),
            x.y + model.dt * (vx * s + vy * c),
            wrap_angle(theta + model.dt * omega),
        )
    down, cross, turn = u
    heading = theta + turn / 2.0
    side = theta + (turn + math.pi) / 2.0
    return RobotState(
        x.x + down * math.cos(heading) + cross * math.cos(side),
        x.y + down * math.sin(heading) + cross * math.sin(side),
        wrap_angle(theta + turn),
    )


def rollout(
    model: DynamicsModel, x0: RobotState, controls: Sequence[Sequence[float]]
) -> List[RobotState]:
    states = [x0]
    for u in controls:
        states.append(step(model, states[-1], u))
    return states


def rollout_batch(model: DynamicsModel, x0: np.ndarray, controls: np.ndarray) -> np.ndarray:
    """
    Vectorized rollout for the planner's cost evaluation.

    `controls` has shape (..., L, 3); the result has shape (..., L + 1, 3).
    Bounds are not checked and headings are left unwrapped.
    """
    controls = np.asarray(controls, dtype=float)
    batch_shape = controls.shape[:-2]
    horizon = controls.shape[-2]
    states = np.empty(batch_shape + (horizon + 1, 3))
    states[..., 0, :] = x0
    x, y, theta = (np.broadcast_to(x0[i], batch_shape).astype(float) for i in range(3))
    for k in range(horizon):
        a, b, c = controls[..., k, 0], controls[..., k, 1], controls[..., k, 2]
        if model.kind == ModelKind.PLANAR_VELOCITY:
            cos_t, sin_t = np.cos(theta), np.sin(theta)
            x = x + model.dt * (a * cos_t - b * sin_t)
            y = y + model.dt * (a * sin_t + b * cos_t)
            theta = theta + model.dt * c
        else:
            heading = theta + c / 2.0
            side = theta + (c + np.pi) / 2.0
            x = x + a * np.cos(heading) + b * np.cos(side)
            y = y + a * np.sin(heading) + b * np.sin(side)
            theta = theta + c
        states[..., k + 1, 0] = x
        states[..., k + 1, 1] = y
        states[..., k + 1, 2] = theta
    return states


def interpolate_states(a: RobotState, b: RobotState, fraction: float) -> RobotState:
    """Linear blend of position; heading follows the shortest arc."""
    dtheta = wrap_angle(b.theta - a.theta)
    return RobotState(
        a.x + fraction * (b.x - a.x),
        a.y + fraction * (b.y - a.y),
        a.theta + fraction * dtheta,
    )


def footprint_at(
    x: RobotState, base_polygons: Sequence[ConvexPolygon], base_cover: CircleCover
) -> Tuple[List[ConvexPolygon], CircleCover]:
    """Place the body-frame footprint at state x (rotate by θ, then translate)."""
    polygons = [transform_polygon(p, x.theta, x.x, x.y) for p in base_polygons]
    cover = CircleCover(tuple(transform_circle(c, x.theta, x.x, x.y) for c in base_cover.circles))
    return polygons, cover


def clip_controls(model: DynamicsModel, controls: np.ndarray) -> np.ndarray:
    return np.clip(controls, np.array(model.control_lower), np.array(model.control_upper))


def zero_control(model: DynamicsModel) -> Control:
    """The zero control, projected into the bounds."""
    return tuple(
        float(min(max(0.0, lo), hi)) for lo, hi in zip(model.control_lower, model.control_upper)
    )


def robot_shapes_at(x: RobotState, robot: RobotSpec) -> List[Shape]:
    """
    World-frame shapes of the robot at state x.

    A robot without polygons is its circle cover.
    """
    polygons, cover = footprint_at(x, robot.polygons, robot.cover)
    if polygons:
        return list(polygons)
    return list(cover.circles)
