"""
Intermediate Representation (IR) for constraint displacement problems.

This module defines the data passed between the planner stages:
- Robot model: RobotState, DynamicsModel, RobotSpec
- World: DomainBounds, ObstacleSpec, Scenario
- Planner configuration: Weights, OverlapCostMode, PlannerConfig
- Results: Trajectory, OverlapReport, DisplacementSolution, RunMetrics, RunReport
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np

from cdplan.core.geometry import (
    Circle,
    CircleCover,
    ConvexPolygon,
    Point2,
    k_circle_cover,
    polygon_centroid,
)

Control = Tuple[float, float, float]
Shape = Union[Circle, ConvexPolygon]


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-π, π]."""
    if -math.pi < theta <= math.pi:
        return float(theta)
    wrapped = math.pi - math.fmod(math.pi - theta, 2 * math.pi)
    if wrapped > math.pi:
        wrapped -= 2 * math.pi
    elif wrapped <= -math.pi:
        wrapped += 2 * math.pi
    return wrapped


class ModelKind(str, Enum):
    PLANAR_VELOCITY = "planar_velocity"
    DOWN_CROSS_TURN = "down_cross_turn"


class CostKind(str, Enum):
    MCD = "mcd"
    MCR = "mcr"
    SHORTEST = "shortest"


class MotionRestriction(str, Enum):
    FREE = "free"
    TRANSLATE_ONLY = "translate_only"
    ROTATE_ONLY = "rotate_only"


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    def distance_to(self, other: "RobotState") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class DynamicsModel:
    """
    Discrete-time robot model.

    `dt` is the Euler step of the planar-velocity model; the down-cross-turn
    model is already a discrete map and ignores it except for timestamps.
    """

    kind: ModelKind
    control_lower: Control
    control_upper: Control
    dt: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "control_lower", tuple(float(v) for v in self.control_lower))
        object.__setattr__(self, "control_upper", tuple(float(v) for v in self.control_upper))
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if len(self.control_lower) != 3 or len(self.control_upper) != 3:
            raise ValueError("Control bounds must have 3 components")
        if any(lo > hi for lo, hi in zip(self.control_lower, self.control_upper)):
            raise ValueError("Control lower bound exceeds upper bound")

    @property
    def step_seconds(self) -> float:
        return self.dt if self.kind == ModelKind.PLANAR_VELOCITY else 1.0


@dataclass(frozen=True)
class DomainBounds:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("Domain bounds must satisfy xmin < xmax and ymin < ymax")

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax


@dataclass(frozen=True)
class RobotSpec:
    model: DynamicsModel
    polygons: Tuple[ConvexPolygon, ...]
    cover: CircleCover
    start: RobotState
    goal: RobotState


def default_cover(shape: Shape) -> CircleCover:
    """Circle cover used when a scenario does not provide one."""
    if isinstance(shape, Circle):
        return CircleCover((shape,))
    span = np.ptp(shape.array, axis=0)
    aspect = float(max(span) / max(min(span), 1e-9))
    return k_circle_cover(shape, int(min(4, max(1, round(aspect)))))


@dataclass(frozen=True)
class ObstacleSpec:
    id: str
    shape: Shape
    cover: CircleCover
    movable: bool = True
    motion: MotionRestriction = MotionRestriction.FREE
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "motion", MotionRestriction(self.motion))
        if not self.weight > 0:
            raise ValueError(f"Obstacle {self.id!r} weight must be positive, got {self.weight}")

    @classmethod
    def create(
        cls,
        obstacle_id: str,
        shape: Shape,
        cover: Optional[CircleCover] = None,
        movable: bool = True,
        motion: Union[str, MotionRestriction] = MotionRestriction.FREE,
        weight: float = 1.0,
    ) -> "ObstacleSpec":
        return cls(
            id=obstacle_id,
            shape=shape,
            cover=cover if cover is not None else default_cover(shape),
            movable=movable,
            motion=MotionRestriction(motion),
            weight=weight,
        )

    @property
    def is_circle(self) -> bool:
        return isinstance(self.shape, Circle)

    @property
    def center(self) -> Point2:
        if isinstance(self.shape, Circle):
            return self.shape.center
        return polygon_centroid(self.shape)


@dataclass(frozen=True)
class Weights:
    Mx: float = 0.0
    Mi: float = 0.5
    Mu: float = 0.1
    Mg: float = 10.0

    def __post_init__(self):
        for name in ("Mx", "Mi", "Mu", "Mg"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"Weight {name} must be finite and non-negative, got {value}")


@dataclass(frozen=True)
class OverlapCostMode:
    kind: CostKind = CostKind.MCD
    eta0: float = 100.0
    epsilon: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "kind", CostKind(self.kind))
        if not (self.eta0 > 0 and self.epsilon > 0):
            raise ValueError("eta0 and epsilon must be positive")


@dataclass(frozen=True)
class PlannerConfig:
    """
    Receding-horizon settings.

    `state_reference` is None (the zero state), a 3-tuple, or "goal".
    """

    horizon: int = 21
    max_steps: int = 200
    goal_tolerance: float = 0.1
    weights: Weights = field(default_factory=Weights)
    mode: OverlapCostMode = field(default_factory=OverlapCostMode)
    state_reference: Union[None, str, Tuple[float, float, float]] = None
    wall_weight: float = 1e4

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if self.max_steps < 0:
            raise ValueError(f"max_steps must be non-negative, got {self.max_steps}")
        if not self.goal_tolerance > 0:
            raise ValueError(f"goal_tolerance must be positive, got {self.goal_tolerance}")
        if isinstance(self.state_reference, str) and self.state_reference != "goal":
            raise ValueError("state_reference must be null, a 3-vector or 'goal'")

    def reference_state(self, goal: RobotState) -> np.ndarray:
        if self.state_reference is None:
            return np.zeros(3)
        if self.state_reference == "goal":
            return goal.as_array()
        return np.asarray(self.state_reference, dtype=float)


@dataclass(frozen=True)
class Scenario:
    name: str
    domain: DomainBounds
    robot: RobotSpec
    obstacles: Tuple[ObstacleSpec, ...]
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    def __post_init__(self):
        ids = [o.id for o in self.obstacles]
        if len(set(ids)) != len(ids):
            raise ValueError("Obstacle ids must be unique")

    def obstacle(self, obstacle_id: str) -> ObstacleSpec:
        for ob in self.obstacles:
            if ob.id == obstacle_id:
                return ob
        raise KeyError(obstacle_id)

    @property
    def movable_obstacles(self) -> List[ObstacleSpec]:
        return [o for o in self.obstacles if o.movable]


@dataclass
class Trajectory:
    """States x_0..x_T and the controls u_0..u_{T-1} that produced them."""

    states: List[RobotState]
    controls: List[Control]
    step_seconds: float = 0.1

    @property
    def times(self) -> List[float]:
        return [k * self.step_seconds for k in range(len(self.states))]

    def __len__(self) -> int:
        return len(self.controls)


@dataclass
class OverlapReport:
    """Per-step, per-obstacle overlap depths of an executed trajectory."""

    obstacle_ids: List[str]
    per_step_per_obstacle: np.ndarray
    eta_state: Dict[str, float] = field(default_factory=dict)

    @property
    def overlapped_ids(self) -> FrozenSet[str]:
        if self.per_step_per_obstacle.size == 0:
            return frozenset()
        hit = np.any(self.per_step_per_obstacle > 0.0, axis=0)
        return frozenset(i for i, flag in zip(self.obstacle_ids, hit) if flag)

    @property
    def total_overlap(self) -> float:
        return float(np.sum(self.per_step_per_obstacle))


@dataclass
class DisplacementSolution:
    obstacle_id: str
    before: Shape
    new_shape: Shape
    centroid_shift: float
    rotation: float
    objective_value: float
    feasible: bool


@dataclass
class RunMetrics:
    total_displacement_magnitude: float = 0.0
    displaced_count: int = 0
    overlap_stage_seconds: float = 0.0
    displacement_stage_seconds: float = 0.0


@dataclass
class RunReport:
    scenario: Scenario
    trajectory: Trajectory
    overlap: OverlapReport
    solutions: List[DisplacementSolution] = field(default_factory=list)
    metrics: RunMetrics = field(default_factory=RunMetrics)
    goal_reached: bool = True
    unresolved_ids: List[str] = field(default_factory=list)
    certificate_violations: List[Tuple[str, int]] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.certificate_violations or self.unresolved_ids:
            return "infeasible"
        if not self.goal_reached:
            return "goal_not_reached"
        return "ok"

    def displaced_shapes(self) -> Dict[str, Shape]:
        return {s.obstacle_id: s.new_shape for s in self.solutions if s.feasible}


def states_from_array(arr: Sequence[Sequence[float]]) -> List[RobotState]:
    return [RobotState(float(r[0]), float(r[1]), float(r[2])) for r in arr]
