"""
Stage 1: receding-horizon planning through movable obstacles.

At every step an L-step control sequence is optimized against a weighted sum
of state cost, control effort, overlap cost and a terminal goal cost; the
first control is executed and the problem is solved again from the new state.
The overlap cost depends on the problem kind:
- MCD: the overlap depth itself (identity)
- MCR: a saturating count η L / (L + ε), with η zeroed once an obstacle is hit
- Shortest: movable obstacles are ignored
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from cdplan.core.errors import GoalNotReached, SolverFailure
from cdplan.core.geometry import CircleCover, overlap_measure_cover, penetration_depth
from cdplan.core.ir import (
    Control,
    CostKind,
    DomainBounds,
    DynamicsModel,
    ModelKind,
    ObstacleSpec,
    OverlapCostMode,
    OverlapReport,
    PlannerConfig,
    RobotState,
    Scenario,
    Trajectory,
    Weights,
    wrap_angle,
)
from cdplan.engine import dynamics
from cdplan.engine.nlp import NlpProblem, NlpSettings, batched_gradient, solve

logger = logging.getLogger(__name__)

PLANNER_NLP_SETTINGS = NlpSettings(
    max_outer_iterations=1,
    max_inner_iterations=150,
    gradient_tolerance=1e-5,
    function_tolerance=1e-10,
)


def _wrap(values: np.ndarray) -> np.ndarray:
    return np.pi - np.mod(np.pi - values, 2 * np.pi)


def obstacle_weight(ob: ObstacleSpec, weights: Weights, wall_weight: float) -> float:
    """Mi for one obstacle: base weight times difficulty, or the wall weight if fixed."""
    return weights.Mi * ob.weight if ob.movable else wall_weight


def overlap_penalty(depth: float, mode: OverlapCostMode, eta: float) -> float:
    """h(L) for a movable obstacle."""
    if mode.kind == CostKind.MCR:
        return eta * depth / (depth + mode.epsilon)
    return depth


def stage_cost(
    x: RobotState,
    u: Sequence[float],
    robot_cover: CircleCover,
    obstacles: Sequence[ObstacleSpec],
    weights: Weights,
    mode: OverlapCostMode,
    eta_state: Optional[Mapping[str, float]] = None,
    reference: Optional[np.ndarray] = None,
    wall_weight: float = 1e4,
) -> float:
    """
    Mx |x - ref|² + Σ Mi h(Li)² + Mu |u|² for one look-ahead step.

    Li is the cover overlap between the placed robot and obstacle i. Fixed
    obstacles always count with the wall weight and identity h.
    """
    ref = np.zeros(3) if reference is None else np.asarray(reference, dtype=float)
    diff = x.as_array() - ref
    diff[2] = wrap_angle(diff[2])
    cost = weights.Mx * float(diff @ diff)
    cost += weights.Mu * float(np.dot(u, u))
    _, cover = dynamics.footprint_at(x, [], robot_cover)
    eta_state = eta_state or {}
    for ob in obstacles:
        if ob.movable and mode.kind == CostKind.SHORTEST:
            continue
        depth = overlap_measure_cover(cover, ob.cover)
        if ob.movable:
            h = overlap_penalty(depth, mode, eta_state.get(ob.id, mode.eta0))
        else:
            h = depth
        cost += obstacle_weight(ob, weights, wall_weight) * h * h
    return cost


def terminal_cost(x: RobotState, goal: RobotState, Mg: float) -> float:
    """Mg |x - goal|² with the heading difference wrapped."""
    diff = x.as_array() - goal.as_array()
    diff[2] = wrap_angle(diff[2])
    return Mg * float(diff @ diff)


@dataclass
class _ObstacleArrays:
    """Cover circles of the obstacles seen by the cost, grouped by obstacle."""

    ids: List[str]
    centers: np.ndarray  # (K, 2)
    radii: np.ndarray  # (K,)
    starts: np.ndarray  # first circle index of each obstacle
    weights: np.ndarray  # Mi per obstacle
    movable: np.ndarray  # bool per obstacle

    @classmethod
    def build(cls, obstacles: Sequence[ObstacleSpec], weights: Weights, wall_weight: float):
        ids, centers, radii, starts, mi, movable = [], [], [], [], [], []
        for ob in obstacles:
            starts.append(len(radii))
            ids.append(ob.id)
            for c in ob.cover.circles:
                centers.append((c.center.x, c.center.y))
                radii.append(c.radius)
            mi.append(obstacle_weight(ob, weights, wall_weight))
            movable.append(ob.movable)
        return cls(
            ids=ids,
            centers=np.array(centers, dtype=float).reshape(-1, 2),
            radii=np.array(radii, dtype=float),
            starts=np.array(starts, dtype=int),
            weights=np.array(mi, dtype=float),
            movable=np.array(movable, dtype=bool),
        )

    def __len__(self) -> int:
        return len(self.ids)


class HorizonCost:
    """
    Batched cost of one receding-horizon problem.

    Evaluates Σ stage costs plus the terminal cost for many control sequences
    at once; the decision vector is the L controls flattened row by row.
    """

    def __init__(
        self,
        model: DynamicsModel,
        x_k: RobotState,
        goal: RobotState,
        robot_cover: CircleCover,
        obstacles: Sequence[ObstacleSpec],
        config: PlannerConfig,
        eta_state: Mapping[str, float],
        domain: Optional[DomainBounds] = None,
    ):
        self.model = model
        self.x_k = x_k.as_array()
        self.goal = goal.as_array()
        self.config = config
        self.horizon = config.horizon
        self.reference = config.reference_state(goal)
        self.domain = domain
        self.body_centers = robot_cover.centers
        self.body_radii = robot_cover.radii
        seen = [
            ob
            for ob in obstacles
            if not (ob.movable and config.mode.kind == CostKind.SHORTEST)
            and self._reachable(ob, x_k)
        ]
        self.obstacles = _ObstacleArrays.build(seen, config.weights, config.wall_weight)
        self.eta = np.array(
            [eta_state.get(i, config.mode.eta0) for i in self.obstacles.ids], dtype=float
        )

    def _reachable(self, ob: ObstacleSpec, x_k: RobotState) -> bool:
        lo = np.abs(np.array(self.model.control_lower))
        hi = np.abs(np.array(self.model.control_upper))
        top = np.maximum(lo, hi)
        if self.model.kind == ModelKind.PLANAR_VELOCITY:
            stride = self.model.dt * math.hypot(top[0], top[1])
        else:
            stride = math.hypot(top[0], top[1])
        extent = float(np.max(np.linalg.norm(self.body_centers, axis=1) + self.body_radii))
        reach = self.horizon * stride + extent
        for c in ob.cover.circles:
            if math.hypot(c.center.x - x_k.x, c.center.y - x_k.y) <= reach + c.radius:
                return True
        return False

    def batch(self, z: np.ndarray) -> np.ndarray:
        """Cost of each row of z, shape (m, 3L) -> (m,)."""
        w = self.config.weights
        controls = np.asarray(z, dtype=float).reshape(z.shape[0], self.horizon, 3)
        states = dynamics.rollout_batch(self.model, self.x_k, controls)
        stage = states[:, : self.horizon, :]

        diff = stage - self.reference
        diff[..., 2] = _wrap(diff[..., 2])
        cost = w.Mx * np.sum(diff * diff, axis=(1, 2))
        cost += w.Mu * np.sum(controls * controls, axis=(1, 2))

        theta = stage[..., 2]
        cos_t, sin_t = np.cos(theta)[..., None], np.sin(theta)[..., None]
        bx, by = self.body_centers[:, 0], self.body_centers[:, 1]
        # Robot cover circle centers in the world frame: (m, L, C)
        cx = stage[..., 0:1] + cos_t * bx - sin_t * by
        cy = stage[..., 1:2] + sin_t * bx + cos_t * by

        if len(self.obstacles):
            ox, oy = self.obstacles.centers[:, 0], self.obstacles.centers[:, 1]
            dist = np.hypot(cx[..., None] - ox, cy[..., None] - oy)  # (m, L, C, K)
            depth = np.maximum(self.body_radii[:, None] + self.obstacles.radii - dist, 0.0)
            per_circle = depth.sum(axis=2)  # (m, L, K)
            per_obstacle = np.add.reduceat(per_circle, self.obstacles.starts, axis=-1)
            h = per_obstacle
            if self.config.mode.kind == CostKind.MCR:
                saturating = self.eta * per_obstacle / (per_obstacle + self.config.mode.epsilon)
                h = np.where(self.obstacles.movable, saturating, per_obstacle)
            cost += np.sum(self.obstacles.weights * h * h, axis=(1, 2))

        if self.domain is not None:
            r = self.body_radii
            d = self.domain
            pen = (
                np.maximum(r - (cx - d.xmin), 0.0)
                + np.maximum(r - (d.xmax - cx), 0.0)
                + np.maximum(r - (cy - d.ymin), 0.0)
                + np.maximum(r - (d.ymax - cy), 0.0)
            )
            cost += self.config.wall_weight * np.sum(pen * pen, axis=(1, 2))

        final = states[:, self.horizon, :] - self.goal
        final[:, 2] = _wrap(final[:, 2])
        cost += w.Mg * np.sum(final * final, axis=1)
        return cost

    def value(self, z: np.ndarray) -> float:
        return float(self.batch(np.asarray(z, dtype=float)[None, :])[0])

    def gradient(self, z: np.ndarray, h: float) -> np.ndarray:
        return batched_gradient(self.batch, z, h)


def plan_horizon(
    model: DynamicsModel,
    x_k: RobotState,
    config: PlannerConfig,
    obstacles: Sequence[ObstacleSpec],
    eta_state: Mapping[str, float],
    goal: RobotState,
    robot_cover: CircleCover,
    domain: Optional[DomainBounds] = None,
    warm_start: Optional[np.ndarray] = None,
    settings: Optional[NlpSettings] = None,
) -> np.ndarray:
    """
    Optimize L controls from x_k by single shooting.

    Returns an (L, 3) array inside the control bounds. Raises SolverFailure
    (with the best-effort controls as `result`) when the NLP does not converge.
    """
    settings = settings or PLANNER_NLP_SETTINGS
    cost = HorizonCost(model, x_k, goal, robot_cover, obstacles, config, eta_state, domain)
    lower = np.tile(np.array(model.control_lower), config.horizon)
    upper = np.tile(np.array(model.control_upper), config.horizon)
    if warm_start is None:
        start = np.tile(np.array(dynamics.zero_control(model)), config.horizon)
    else:
        start = np.asarray(warm_start, dtype=float).reshape(-1)
    h = settings.finite_difference_step
    problem = NlpProblem(
        dimension=3 * config.horizon,
        objective=cost.value,
        initial_point=np.clip(start, lower, upper),
        lower_bounds=lower,
        upper_bounds=upper,
        objective_gradient=lambda z: cost.gradient(z, h),
    )
    result = solve(problem, settings)
    controls = np.clip(result.point, lower, upper).reshape(config.horizon, 3)
    if not result.converged:
        raise SolverFailure(
            f"Horizon solve ended with status {result.status.value}", result=controls
        )
    return controls


def overlap_report(
    scenario: Scenario,
    states: Sequence[RobotState],
    eta_state: Optional[Dict[str, float]] = None,
) -> OverlapReport:
    """Per-step overlap of the robot polygons with every obstacle shape."""
    ids = [ob.id for ob in scenario.obstacles]
    matrix = np.zeros((len(states), len(ids)))
    for k, state in enumerate(states):
        shapes = dynamics.robot_shapes_at(state, scenario.robot)
        for j, ob in enumerate(scenario.obstacles):
            matrix[k, j] = max(penetration_depth(s, ob.shape) for s in shapes)
    return OverlapReport(ids, matrix, dict(eta_state or {}))


class OverlapPlanner:
    """
    Runs the receding-horizon loop for one scenario.

    Holds the per-run state: the MCR η of every movable obstacle and the warm
    start for the next horizon.
    """

    def __init__(
        self,
        scenario: Scenario,
        config: Optional[PlannerConfig] = None,
        settings: Optional[NlpSettings] = None,
    ):
        self.scenario = scenario
        self.config = config or scenario.planner
        self.settings = settings or PLANNER_NLP_SETTINGS
        self.model = scenario.robot.model
        self.eta_state: Dict[str, float] = {
            ob.id: self.config.mode.eta0 for ob in scenario.obstacles if ob.movable
        }
        self.best_effort_steps = 0

    def _mark_overlaps(self, state: RobotState) -> None:
        if self.config.mode.kind != CostKind.MCR:
            return
        _, cover = dynamics.footprint_at(state, [], self.scenario.robot.cover)
        for ob in self.scenario.obstacles:
            if ob.movable and self.eta_state.get(ob.id, 0.0) > 0.0:
                if overlap_measure_cover(cover, ob.cover) > 0.0:
                    self.eta_state[ob.id] = 0.0
                    logger.debug("obstacle %s overlapped; eta set to 0", ob.id)

    def plan_horizon(self, x_k: RobotState, warm_start: Optional[np.ndarray] = None) -> np.ndarray:
        robot = self.scenario.robot
        return plan_horizon(
            self.model,
            x_k,
            self.config,
            self.scenario.obstacles,
            self.eta_state,
            goal=robot.goal,
            robot_cover=robot.cover,
            domain=self.scenario.domain,
            warm_start=warm_start,
            settings=self.settings,
        )

    def plan(self) -> Tuple[Trajectory, OverlapReport]:
        robot = self.scenario.robot
        goal = robot.goal
        state = robot.start
        states: List[RobotState] = [state]
        controls: List[Control] = []
        warm: Optional[np.ndarray] = None
        self._mark_overlaps(state)
        reached = state.distance_to(goal) <= self.config.goal_tolerance
        for k in range(self.config.max_steps):
            if reached:
                break
            try:
                sequence = self.plan_horizon(state, warm)
            except SolverFailure as e:
                sequence = e.result
                self.best_effort_steps += 1
            u = tuple(float(v) for v in dynamics.clip_controls(self.model, sequence[0]))
            state = dynamics.step(self.model, state, u)
            states.append(state)
            controls.append(u)
            self._mark_overlaps(state)
            warm = np.concatenate([sequence[1:], sequence[-1:]], axis=0)
            reached = state.distance_to(goal) <= self.config.goal_tolerance
            logger.debug("step %d: state=(%.3f, %.3f, %.3f)", k, state.x, state.y, state.theta)

        if self.best_effort_steps:
            logger.warning(
                "%d of %d horizon solves did not converge; best-effort controls used",
                self.best_effort_steps,
                len(controls),
            )
        trajectory = Trajectory(states, controls, self.model.step_seconds)
        report = overlap_report(self.scenario, states, self.eta_state)
        logger.info(
            "stage 1 finished after %d steps, %d obstacles overlapped",
            len(controls),
            len(report.overlapped_ids),
        )
        if not reached:
            raise GoalNotReached(
                f"Goal not reached within {self.config.max_steps} steps "
                f"(remaining distance {state.distance_to(goal):.3f} m)",
                trajectory=trajectory,
                report=report,
            )
        return trajectory, report


def plan(
    scenario: Scenario,
    config: Optional[PlannerConfig] = None,
    settings: Optional[NlpSettings] = None,
) -> Tuple[Trajectory, OverlapReport]:
    """Plan a full trajectory for `scenario` (see OverlapPlanner)."""
    return OverlapPlanner(scenario, config, settings).plan()
