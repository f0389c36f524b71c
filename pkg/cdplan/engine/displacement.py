"""
Stage 2: rigid displacement of overlapped obstacles.

For every obstacle the stage-1 trajectory overlaps, the robot footprints that
touch it along the trajectory (the witnesses) are collected and a small NLP
moves the obstacle as little as possible until no witness intersects it.

Decision vectors hold the obstacle's vertex coordinates (x0, y0, x1, y1, ...)
or, for a circle, its center. The constraint builders follow the classical
line-parameter formulation; every candidate they produce is then refined with
one separating line per witness and re-certified with exact predicates.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cdplan.core.errors import NoFeasibleSolutionFound, NoOverlap
from cdplan.core.geometry import (
    CLEARANCE_SLACK,
    PARALLEL_TOLERANCE,
    SEGMENT_EPSILON,
    Circle,
    ConvexPolygon,
    Point2,
    Segment,
    area_centroid,
    min_enclosing_circle,
    overlap_measure,
    penetration_depth,
    polygon_centroid,
    shape_distance,
)
from cdplan.core.ir import (
    DisplacementSolution,
    MotionRestriction,
    ObstacleSpec,
    RobotSpec,
    Scenario,
    Shape,
    Trajectory,
)
from cdplan.engine import dynamics
from cdplan.engine.nlp import ConstraintFn, NlpProblem, NlpResult, NlpSettings, solve

logger = logging.getLogger(__name__)

DISPLACEMENT_NLP_SETTINGS = NlpSettings(
    max_outer_iterations=30,
    max_inner_iterations=300,
    constraint_tolerance=1e-7,
    gradient_tolerance=1e-6,
)

# Rounding allowance when comparing a gap against the clearance slack.
_GAP_ROUNDING = 1e-12


class ObjectiveKind(str, Enum):
    VERTEX_SUM = "vertex_sum"
    CENTROID_SHIFT = "centroid_shift"


@dataclass(frozen=True)
class DisplacementConfig:
    """
    Stage-2 tunables.

    `seed_starts` K adds the shift magnitudes Δ ± kδ for k = 2..K to the
    twelve default starts.
    """

    margin: float = 1e-4
    clearance_slack: float = CLEARANCE_SLACK
    delta_fraction: float = 0.25
    witness_resolution: float = 0.01
    objective: ObjectiveKind = ObjectiveKind.VERTEX_SUM
    refine: bool = True
    refine_starts: int = 3
    active_set_rounds: int = 6
    initial_witnesses: int = 12
    seed_starts: int = 1

    def __post_init__(self):
        object.__setattr__(self, "objective", ObjectiveKind(self.objective))
        if not (self.margin >= 0 and self.clearance_slack >= 0):
            raise ValueError("margin and clearance_slack must be non-negative")
        if not 0 < self.delta_fraction < 1:
            raise ValueError(f"delta_fraction must be in (0, 1), got {self.delta_fraction}")
        if not 0 < self.witness_resolution <= 1:
            raise ValueError(
                f"witness_resolution must be in (0, 1], got {self.witness_resolution}"
            )
        for name in ("refine_starts", "active_set_rounds", "initial_witnesses", "seed_starts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


# ---------------------------------------------------------------------------
# Witness sets
# ---------------------------------------------------------------------------


def _bounding_circle(shape: Shape) -> Tuple[np.ndarray, float]:
    if isinstance(shape, Circle):
        return np.array([shape.center.x, shape.center.y]), shape.radius
    center = shape.array.mean(axis=0)
    return center, float(np.max(np.linalg.norm(shape.array - center, axis=1)))


class WitnessSet:
    """Robot footprints with bounding circles for fast rejection."""

    def __init__(self, shapes: Sequence[Shape], times: Optional[Sequence[float]] = None):
        self.shapes = list(shapes)
        self.times = np.asarray(times if times is not None else range(len(self.shapes)), float)
        bounds = [_bounding_circle(s) for s in self.shapes]
        self.centers = np.array([b[0] for b in bounds], dtype=float).reshape(-1, 2)
        self.radii = np.array([b[1] for b in bounds], dtype=float)

    def __len__(self) -> int:
        return len(self.shapes)

    def near(self, shape: Shape, distance: float) -> np.ndarray:
        """Indices of footprints whose bounding circle comes within `distance` of shape."""
        if not self.shapes:
            return np.zeros(0, dtype=int)
        center, radius = _bounding_circle(shape)
        gaps = np.linalg.norm(self.centers - center, axis=1) - self.radii - radius
        return np.flatnonzero(gaps <= distance)

    def violations(self, shape: Shape, slack: float) -> List[int]:
        """Footprints that intersect shape or come closer than `slack`."""
        return [
            int(i)
            for i in self.near(shape, slack)
            if shape_distance(shape, self.shapes[i]) < slack - _GAP_ROUNDING
        ]

    def depths(self, shape: Shape, indices: Sequence[int]) -> np.ndarray:
        return np.array([penetration_depth(shape, self.shapes[i]) for i in indices])


def sweep_footprints(
    trajectory: Trajectory, robot: RobotSpec, resolution: float = 0.01
) -> WitnessSet:
    """
    Robot footprints along the trajectory, sampled every `resolution` of a step.

    Sample times are in steps (k + fraction); the final state is included.
    """
    samples = max(1, int(round(1.0 / resolution)))
    shapes: List[Shape] = []
    times: List[float] = []
    states = trajectory.states
    for k in range(len(states) - 1):
        for j in range(samples):
            fraction = j / samples
            state = dynamics.interpolate_states(states[k], states[k + 1], fraction)
            for s in dynamics.robot_shapes_at(state, robot):
                shapes.append(s)
                times.append(k + fraction)
    for s in dynamics.robot_shapes_at(states[-1], robot):
        shapes.append(s)
        times.append(float(len(states) - 1))
    return WitnessSet(shapes, times)


def extract_witnesses(
    trajectory: Trajectory,
    scenario: Scenario,
    obstacle: ObstacleSpec,
    resolution: float = 0.01,
    slack: float = CLEARANCE_SLACK,
) -> List[Shape]:
    """Footprints along the trajectory that the obstacle fails to clear by `slack`."""
    sweep = sweep_footprints(trajectory, scenario.robot, resolution)
    return [sweep.shapes[i] for i in sweep.violations(obstacle.shape, slack)]


def certify(shape: Shape, witnesses: Sequence[Shape], slack: float = CLEARANCE_SLACK) -> bool:
    """True iff shape clears every witness by at least `slack` (exact predicates)."""
    return not WitnessSet(witnesses).violations(shape, slack)


# ---------------------------------------------------------------------------
# Decision-vector layout
# ---------------------------------------------------------------------------


class _ObstacleVars:
    """Maps the obstacle part of a decision vector to geometry."""

    def __init__(self, shape: Shape, restriction: MotionRestriction, objective: ObjectiveKind):
        self.shape = shape
        self.restriction = MotionRestriction(restriction)
        self.objective_kind = ObjectiveKind(objective)
        if isinstance(shape, Circle):
            self.base = np.array([[shape.center.x, shape.center.y]])
            self.radius = shape.radius
        else:
            self.base = np.array(shape.array, dtype=float)
            self.radius = 0.0
        self.z0 = self.base.reshape(-1).copy()
        self.size = self.z0.size
        self.count = self.base.shape[0]

    @property
    def is_circle(self) -> bool:
        return isinstance(self.shape, Circle)

    def points(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z[: self.size]).reshape(-1, 2)

    def objective(self, z: np.ndarray) -> float:
        delta = self.points(z) - self.base
        if self.objective_kind == ObjectiveKind.CENTROID_SHIFT:
            shift = delta.mean(axis=0)
            return float(shift @ shift)
        return float(np.sum(delta * delta))

    def gradient(self, z: np.ndarray) -> np.ndarray:
        g = np.zeros(np.asarray(z).size)
        delta = self.points(z) - self.base
        if self.objective_kind == ObjectiveKind.CENTROID_SHIFT:
            g[: self.size] = np.tile(2.0 * delta.mean(axis=0) / self.count, self.count)
        else:
            g[: self.size] = 2.0 * delta.reshape(-1)
        return g

    def snap(self, z: np.ndarray) -> Tuple[np.ndarray, float]:
        """Closest exact rigid placement of the obstacle to z, and its rotation."""
        target = self.points(z)
        if self.is_circle:
            if self.restriction == MotionRestriction.ROTATE_ONLY:
                return self.z0.copy(), 0.0
            return target.reshape(-1).copy(), 0.0
        m0 = self.base.mean(axis=0)
        m = target.mean(axis=0)
        if self.restriction == MotionRestriction.TRANSLATE_ONLY:
            return (self.base + (m - m0)).reshape(-1), 0.0
        # Kabsch: rotation best mapping the centered base onto the centered target.
        h = (self.base - m0).T @ (target - m)
        u, _, vt = np.linalg.svd(h)
        d = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
        rot = vt.T @ np.diag([1.0, d]) @ u.T
        if self.restriction == MotionRestriction.ROTATE_ONLY:
            c0 = area_centroid(self.base)
            placed = (self.base - c0) @ rot.T + c0
        else:
            placed = (self.base - m0) @ rot.T + m
        return placed.reshape(-1), float(math.atan2(rot[1, 0], rot[0, 0]))

    def shape_at(self, z: np.ndarray) -> Shape:
        pts = self.points(z)
        if self.is_circle:
            return Circle(Point2(float(pts[0, 0]), float(pts[0, 1])), self.radius)
        return ConvexPolygon.from_coords([tuple(p) for p in pts], normalize=False)

    def center(self, z: np.ndarray) -> np.ndarray:
        return self.points(z).mean(axis=0)

    def edges(self) -> List[Tuple[int, int]]:
        return [(i, (i + 1) % self.count) for i in range(self.count)]


def _shape_points(shape: Shape) -> Tuple[np.ndarray, float]:
    if isinstance(shape, Circle):
        return np.array([[shape.center.x, shape.center.y]]), shape.radius
    return np.asarray(shape.array, dtype=float), 0.0


def _shape_center(shape: Shape) -> np.ndarray:
    pts, _ = _shape_points(shape)
    return pts.mean(axis=0)


def _enclosing_diameter(shape: Shape) -> float:
    if isinstance(shape, Circle):
        return 2.0 * shape.radius
    return 2.0 * min_enclosing_circle(shape).radius


# ---------------------------------------------------------------------------
# Constraint builders
# ---------------------------------------------------------------------------


def build_segment_circle_constraints(
    edges: Sequence[Tuple[int, int]], witness: Circle, margin: float = 1e-4
) -> ConstraintFn:
    """
    (d·e)² - |d|²(|e|² - r²) + margin <= 0 for every obstacle edge.

    Edge (i, j) runs between vertices i and j of the decision vector; d = vi - vj
    and e = vj - center. Negative means the edge's line misses the circle.
    """
    first = np.array([e[0] for e in edges], dtype=int)
    second = np.array([e[1] for e in edges], dtype=int)
    center = np.array([witness.center.x, witness.center.y])
    r2 = witness.radius**2

    def constraint(z: np.ndarray) -> np.ndarray:
        v = np.asarray(z[: 2 * (max(first.max(), second.max()) + 1)]).reshape(-1, 2)
        d = v[first] - v[second]
        e = v[second] - center
        de = np.sum(d * e, axis=1)
        return de * de - np.sum(d * d, axis=1) * (np.sum(e * e, axis=1) - r2) + margin

    return constraint


def _circle_edges_constraint(
    radius: float, witness: ConvexPolygon, margin: float
) -> ConstraintFn:
    """Discriminant rows for a circle obstacle (center in z[0:2]) against fixed edges."""
    a = witness.array
    b = np.roll(a, -1, axis=0)
    d = a - b
    dd = np.sum(d * d, axis=1)
    r2 = radius**2

    def constraint(z: np.ndarray) -> np.ndarray:
        e = b - np.asarray(z[:2])
        de = np.sum(d * e, axis=1)
        return de * de - dd * (np.sum(e * e, axis=1) - r2) + margin

    return constraint


def _circle_circle_constraint(radius: float, witness: Circle, margin: float) -> ConstraintFn:
    center = np.array([witness.center.x, witness.center.y])
    reach = radius + witness.radius + margin

    def constraint(z: np.ndarray) -> np.ndarray:
        gap = np.asarray(z[:2]) - center
        return np.array([reach * reach - gap @ gap])

    return constraint


def build_segment_segment_constraints(
    edges: Sequence[Tuple[int, int]],
    witness_edge: Segment,
    epsilon: float = SEGMENT_EPSILON,
) -> ConstraintFn:
    """
    1/t - 1 <= 0 and 1/s - 1 <= 0 for every obstacle edge against one witness edge.

    t parametrizes the obstacle edge (vj at 0, vi at 1), s the witness edge (b
    at 0, a at 1); epsilon is added to both numerators. Parallel pairs give the
    satisfied value -1.
    """
    first = np.array([e[0] for e in edges], dtype=int)
    second = np.array([e[1] for e in edges], dtype=int)
    x3, y3 = witness_edge.a.x, witness_edge.a.y
    x4, y4 = witness_edge.b.x, witness_edge.b.y

    def constraint(z: np.ndarray) -> np.ndarray:
        v = np.asarray(z[: 2 * (max(first.max(), second.max()) + 1)]).reshape(-1, 2)
        x1, y1 = v[first, 0], v[first, 1]
        x2, y2 = v[second, 0], v[second, 1]
        den = -(x1 - x2) * (y3 - y4) + (y1 - y2) * (x3 - x4)
        t_num = -(y3 - y4) * (x4 - x2) + (x3 - x4) * (y4 - y2) + epsilon
        s_num = -(y1 - y2) * (x4 - x2) + (x1 - x2) * (y4 - y2) + epsilon
        usable = np.abs(den) > PARALLEL_TOLERANCE
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_t = np.where(usable & (t_num != 0), den / t_num - 1.0, -1.0)
            inv_s = np.where(usable & (s_num != 0), den / s_num - 1.0, -1.0)
        return np.concatenate([inv_t, inv_s])

    return constraint


def build_rigidity_constraints(
    shape: ConvexPolygon, restriction: MotionRestriction = MotionRestriction.FREE
) -> List[ConstraintFn]:
    """
    Equalities keeping the polygon congruent to `shape`.

    Free keeps every edge length and the diagonals from vertex 0 (2n - 3 rows);
    RotateOnly also pins the area centroid; TranslateOnly pins every consecutive
    coordinate difference.
    """
    base = np.array(shape.array, dtype=float)
    n = base.shape[0]
    restriction = MotionRestriction(restriction)

    if restriction == MotionRestriction.TRANSLATE_ONLY:
        steps = (base[1:] - base[:-1]).reshape(-1)

        def differences(z: np.ndarray) -> np.ndarray:
            v = np.asarray(z[: 2 * n]).reshape(n, 2)
            return (v[1:] - v[:-1]).reshape(-1) - steps

        return [differences]

    pairs = [(i, (i + 1) % n) for i in range(n)] + [(0, k) for k in range(2, n - 1)]
    first = np.array([p[0] for p in pairs])
    second = np.array([p[1] for p in pairs])
    lengths = np.sum((base[first] - base[second]) ** 2, axis=1)

    def distances(z: np.ndarray) -> np.ndarray:
        v = np.asarray(z[: 2 * n]).reshape(n, 2)
        return np.sum((v[first] - v[second]) ** 2, axis=1) - lengths

    constraints: List[ConstraintFn] = [distances]
    if restriction == MotionRestriction.ROTATE_ONLY:
        centroid = area_centroid(base)

        def pinned(z: np.ndarray) -> np.ndarray:
            return area_centroid(np.asarray(z[: 2 * n]).reshape(n, 2)) - centroid

        constraints.append(pinned)
    return constraints


def _restriction_constraints(layout: _ObstacleVars) -> List[ConstraintFn]:
    if not layout.is_circle:
        return build_rigidity_constraints(layout.shape, layout.restriction)
    if layout.restriction == MotionRestriction.ROTATE_ONLY:
        center = layout.z0.copy()
        return [lambda z: np.asarray(z[:2]) - center]
    return []


def _witness_constraints(
    layout: _ObstacleVars, witnesses: Sequence[Shape], margin: float
) -> List[ConstraintFn]:
    constraints: List[ConstraintFn] = []
    for w in witnesses:
        if layout.is_circle:
            if isinstance(w, Circle):
                constraints.append(_circle_circle_constraint(layout.radius, w, margin))
            else:
                constraints.append(_circle_edges_constraint(layout.radius, w, margin))
        elif isinstance(w, Circle):
            constraints.append(build_segment_circle_constraints(layout.edges(), w, margin))
        else:
            for edge in w.edges:
                constraints.append(build_segment_segment_constraints(layout.edges(), edge))
    return constraints


# ---------------------------------------------------------------------------
# Starting points
# ---------------------------------------------------------------------------


def initial_points(
    obstacle: Shape,
    witnesses: Sequence[Shape],
    delta_step: Optional[float] = None,
    restriction: MotionRestriction = MotionRestriction.FREE,
    delta_fraction: float = 0.25,
    seed_starts: int = 1,
    slack: float = CLEARANCE_SLACK,
) -> List[np.ndarray]:
    """
    Candidate obstacle decision vectors.

    Shifts by ±Δ along x and y, then the same at Δ + δ and Δ - δ (δ = fraction·Δ),
    where Δ defaults to the largest witness enclosing-circle diameter. RotateOnly
    obstacles get rotations about their area centroid instead. Certified candidates come first.
    """
    layout = _ObstacleVars(obstacle, restriction, ObjectiveKind.VERTEX_SUM)
    if delta_step is None:
        delta_step = max((_enclosing_diameter(w) for w in witnesses), default=1.0)
    delta = float(delta_step)
    step = delta_fraction * delta

    candidates: List[np.ndarray] = []
    if restriction == MotionRestriction.ROTATE_ONLY and not layout.is_circle:
        pivot = area_centroid(layout.base)
        for k in range(1, 12):
            angle = k * math.pi / 6.0 if k <= 6 else -(k - 6) * math.pi / 6.0
            c, s = math.cos(angle), math.sin(angle)
            rot = np.array([[c, -s], [s, c]])
            candidates.append(((layout.base - pivot) @ rot.T + pivot).reshape(-1))
    else:
        magnitudes = [delta, delta + step, delta - step]
        for k in range(2, seed_starts + 1):
            magnitudes.extend([delta + k * step, delta - k * step])
        for magnitude in magnitudes:
            if magnitude <= 0:
                continue
            for direction in ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)):
                shift = np.array(direction) * magnitude
                candidates.append((layout.base + shift).reshape(-1))

    witness_set = WitnessSet(witnesses)
    feasible = [not witness_set.violations(layout.shape_at(z), slack) for z in candidates]
    order = sorted(range(len(candidates)), key=lambda i: (not feasible[i], i))
    return [candidates[i] for i in order]


# ---------------------------------------------------------------------------
# Problems and solving
# ---------------------------------------------------------------------------


@dataclass
class DisplacementProblem:
    """
    One obstacle against the robot footprints that overlap it.

    `guards` are further footprints that do not overlap the obstacle now but
    must stay clear after it moves.
    """

    obstacle_id: str
    obstacle: Shape
    robot_witnesses: List[Shape]
    restriction: MotionRestriction = MotionRestriction.FREE
    initial_points: List[np.ndarray] = field(default_factory=list)
    guards: List[Shape] = field(default_factory=list)

    def __post_init__(self):
        self.restriction = MotionRestriction(self.restriction)
        if not self.robot_witnesses:
            raise NoOverlap(f"Obstacle {self.obstacle_id!r} has no overlapping witnesses")
        if not self.initial_points:
            raise ValueError("A displacement problem needs at least one initial point")

    @classmethod
    def create(
        cls,
        obstacle_id: str,
        obstacle: Shape,
        witnesses: Sequence[Shape],
        restriction: MotionRestriction = MotionRestriction.FREE,
        guards: Sequence[Shape] = (),
        config: Optional["DisplacementConfig"] = None,
    ) -> "DisplacementProblem":
        config = config or DisplacementConfig()
        if not witnesses:
            raise NoOverlap(f"Obstacle {obstacle_id!r} has no overlapping witnesses")
        starts = initial_points(
            obstacle,
            witnesses,
            restriction=MotionRestriction(restriction),
            delta_fraction=config.delta_fraction,
            seed_starts=config.seed_starts,
            slack=config.clearance_slack,
        )
        return cls(obstacle_id, obstacle, list(witnesses), restriction, starts, list(guards))


def _solution(
    obstacle_id: str, layout: _ObstacleVars, z: np.ndarray, rotation: float, feasible: bool
) -> DisplacementSolution:
    new_shape = layout.shape_at(z)
    before = layout.shape
    if isinstance(before, Circle):
        shift = math.hypot(new_shape.center.x - before.center.x, new_shape.center.y - before.center.y)
    else:
        a, b = polygon_centroid(before), polygon_centroid(new_shape)
        shift = math.hypot(b.x - a.x, b.y - a.y)
    return DisplacementSolution(
        obstacle_id=obstacle_id,
        before=before,
        new_shape=new_shape,
        centroid_shift=shift,
        rotation=rotation,
        objective_value=layout.objective(z),
        feasible=feasible,
    )


def displace_circle_circle(
    obstacle: Circle,
    witnesses: Sequence[Circle],
    settings: Optional[NlpSettings] = None,
    obstacle_id: str = "",
    config: Optional[DisplacementConfig] = None,
    clearance: float = 0.0,
) -> DisplacementSolution:
    """
    Push a circular obstacle clear of circular witnesses.

    One witness: move the center along the center line by the overlap L plus
    `clearance`; the default leaves the two circles tangent. Several: minimize |Δ|² subject to clearing each.
    Coincident centers are pushed along +x.
    """
    config = config or DisplacementConfig()
    overlapping = [w for w in witnesses if overlap_measure(obstacle, w) > 0.0]
    if not overlapping:
        raise NoOverlap(f"Obstacle {obstacle_id!r} does not overlap any witness")
    layout = _ObstacleVars(obstacle, MotionRestriction.FREE, config.objective)

    if len(witnesses) == 1:
        w = witnesses[0]
        away = layout.z0 - np.array([w.center.x, w.center.y])
        norm = float(np.linalg.norm(away))
        direction = away / norm if norm > 0 else np.array([1.0, 0.0])
        shift = overlap_measure(obstacle, w) + clearance
        z = layout.z0 + shift * direction
        feasible = certify(layout.shape_at(z), witnesses, slack=clearance)
        return _solution(obstacle_id, layout, z, 0.0, feasible)

    starts = initial_points(
        obstacle,
        witnesses,
        delta_fraction=config.delta_fraction,
        seed_starts=config.seed_starts,
        slack=config.clearance_slack,
    )
    constraints = _witness_constraints(layout, witnesses, config.margin)
    witness_set = WitnessSet(witnesses)
    best: Optional[Tuple[float, np.ndarray]] = None
    for start in starts:
        result = solve(
            NlpProblem(
                dimension=2,
                objective=layout.objective,
                initial_point=start,
                inequality_constraints=constraints,
                objective_gradient=layout.gradient,
            ),
            settings or DISPLACEMENT_NLP_SETTINGS,
        )
        if witness_set.violations(layout.shape_at(result.point), config.clearance_slack):
            continue
        value = layout.objective(result.point)
        if best is None or value < best[0]:
            best = (value, result.point.copy())
    if best is None:
        raise NoFeasibleSolutionFound(
            f"No start cleared obstacle {obstacle_id!r}", obstacle_id=obstacle_id
        )
    return _solution(obstacle_id, layout, best[1], 0.0, True)


def _initial_separators(layout: _ObstacleVars, z: np.ndarray, witnesses: Sequence[Shape]):
    """One separating line per witness, normal pointing from obstacle to witness."""
    center = layout.center(z)
    values = []
    for w in witnesses:
        wc = _shape_center(w)
        direction = wc - center
        if not np.any(direction):
            direction = np.array([1.0, 0.0])
        phi = math.atan2(direction[1], direction[0])
        normal = np.array([math.cos(phi), math.sin(phi)])
        values.extend([phi, float(normal @ (center + wc) / 2.0)])
    return np.array(values, dtype=float)


def _separating_constraint(
    layout: _ObstacleVars, witnesses: Sequence[Shape], margin: float
) -> ConstraintFn:
    """
    Exact disjointness through separating lines (cos φj, sin φj)·p = cj.

    Obstacle points satisfy n·p + r - c + margin <= 0; witness points satisfy
    c - (n·w - rw) + margin <= 0.
    """
    k = layout.size
    pts, owner, radii = [], [], []
    for j, w in enumerate(witnesses):
        wp, wr = _shape_points(w)
        pts.append(wp)
        owner.extend([j] * len(wp))
        radii.extend([wr] * len(wp))
    points = np.concatenate(pts)
    owner_idx = np.array(owner, dtype=int)
    point_radii = np.array(radii, dtype=float)

    def constraint(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z)
        phi = z[k::2]
        offsets = z[k + 1 :: 2]
        normals = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        own = layout.points(z) @ normals.T + layout.radius - offsets + margin
        proj = np.sum(points * normals[owner_idx], axis=1) - point_radii
        other = offsets[owner_idx] - proj + margin
        return np.concatenate([own.reshape(-1), other])

    return constraint


def refine_separating(
    problem: DisplacementProblem,
    start: np.ndarray,
    settings: Optional[NlpSettings] = None,
    config: Optional[DisplacementConfig] = None,
    witnesses: Optional[Sequence[Shape]] = None,
) -> NlpResult:
    """
    Re-solve from `start` with one separating line per witness.

    The returned point holds the obstacle variables followed by (φj, cj) pairs.
    """
    config = config or DisplacementConfig()
    witnesses = problem.robot_witnesses if witnesses is None else list(witnesses)
    layout = _ObstacleVars(problem.obstacle, problem.restriction, config.objective)
    start = np.asarray(start, dtype=float)[: layout.size]
    z0 = np.concatenate([start, _initial_separators(layout, start, witnesses)])
    return solve(
        NlpProblem(
            dimension=z0.size,
            objective=layout.objective,
            initial_point=z0,
            inequality_constraints=[_separating_constraint(layout, witnesses, config.margin)],
            equality_constraints=_restriction_constraints(layout),
            objective_gradient=layout.gradient,
        ),
        settings or DISPLACEMENT_NLP_SETTINGS,
    )


@dataclass
class _Candidate:
    z: np.ndarray
    rotation: float
    value: float
    violations: int


def _evaluate(layout: _ObstacleVars, z: np.ndarray, witnesses: WitnessSet, slack: float):
    snapped, rotation = layout.snap(z)
    try:
        shape = layout.shape_at(snapped)
    except ValueError:
        return None
    return _Candidate(
        snapped, rotation, layout.objective(snapped), len(witnesses.violations(shape, slack))
    )


def _solve_round(
    problem: DisplacementProblem,
    layout: _ObstacleVars,
    active: Sequence[Shape],
    settings: NlpSettings,
    config: DisplacementConfig,
) -> List[_Candidate]:
    """Candidates from every start against the active witnesses, best first."""
    active_set = WitnessSet(active)
    slack = config.clearance_slack
    constraints = _witness_constraints(layout, active, config.margin)
    equalities = _restriction_constraints(layout)
    candidates: List[_Candidate] = []
    for index, start in enumerate(problem.initial_points):
        seed = _evaluate(layout, start, active_set, slack)
        if seed is not None and seed.violations == 0:
            candidates.append(seed)
        result = solve(
            NlpProblem(
                dimension=layout.size,
                objective=layout.objective,
                initial_point=start,
                inequality_constraints=constraints,
                equality_constraints=equalities,
                objective_gradient=layout.gradient,
            ),
            settings,
        )
        found = _evaluate(layout, result.point, active_set, slack)
        logger.debug(
            "obstacle %s start %d: status=%s objective=%.6g violations=%s",
            problem.obstacle_id,
            index,
            result.status.value,
            result.objective_value,
            None if found is None else found.violations,
        )
        if found is not None:
            candidates.append(found)

    candidates.sort(key=lambda c: (c.violations, c.value))
    if config.refine:
        seeds = candidates[: config.refine_starts]
        if not seeds:
            seeds = [_Candidate(np.asarray(problem.initial_points[0]), 0.0, math.inf, 1)]
        for seed in seeds:
            result = refine_separating(problem, seed.z, settings, config, active)
            found = _evaluate(layout, result.point, active_set, slack)
            if found is not None:
                candidates.append(found)
        candidates.sort(key=lambda c: (c.violations, c.value))
    return candidates


def _pick_initial_active(problem: DisplacementProblem, limit: int) -> List[int]:
    """Evenly spaced witnesses plus the deepest overlaps."""
    count = len(problem.robot_witnesses)
    if count <= limit:
        return list(range(count))
    spaced = np.linspace(0, count - 1, num=max(2, limit // 2)).round().astype(int)
    depths = WitnessSet(problem.robot_witnesses).depths(problem.obstacle, range(count))
    deepest = np.argsort(-depths, kind="stable")[: limit - len(spaced)]
    return sorted(set(spaced.tolist()) | set(deepest.tolist()))


def displace(
    problem: DisplacementProblem,
    settings: Optional[NlpSettings] = None,
    config: Optional[DisplacementConfig] = None,
) -> DisplacementSolution:
    """
    Minimal rigid displacement clearing every witness and guard.

    Solves against a growing active subset of the witnesses: each round's best
    candidate is certified against all of them and the ones it still hits are
    added. The returned solution is certified with exact predicates.
    """
    settings = settings or DISPLACEMENT_NLP_SETTINGS
    config = config or DisplacementConfig()
    slack = config.clearance_slack
    layout = _ObstacleVars(problem.obstacle, problem.restriction, config.objective)
    everything = WitnessSet(list(problem.robot_witnesses) + list(problem.guards))

    if not everything.violations(problem.obstacle, slack):
        return _solution(problem.obstacle_id, layout, layout.z0, 0.0, True)

    active = _pick_initial_active(problem, config.initial_witnesses)
    best: Optional[_Candidate] = None
    for round_index in range(config.active_set_rounds):
        shapes = [everything.shapes[i] for i in active]
        if (
            layout.is_circle
            and len(shapes) == 1
            and isinstance(shapes[0], Circle)
            and problem.restriction != MotionRestriction.ROTATE_ONLY
            and overlap_measure(problem.obstacle, shapes[0]) > 0.0
        ):
            closed = displace_circle_circle(
                problem.obstacle, shapes, settings, problem.obstacle_id, config, clearance=slack
            )
            candidates = [
                _evaluate(layout, np.array([closed.new_shape.center.x, closed.new_shape.center.y]),
                          WitnessSet(shapes), slack)
            ]
        else:
            candidates = _solve_round(problem, layout, shapes, settings, config)
        candidates = [c for c in candidates if c is not None]
        if not candidates:
            break
        best = candidates[0]
        missed = everything.violations(layout.shape_at(best.z), slack)
        logger.debug(
            "obstacle %s round %d: %d active, best objective %.6g, %d witnesses still hit",
            problem.obstacle_id,
            round_index,
            len(active),
            best.value,
            len(missed),
        )
        if not missed:
            return _solution(problem.obstacle_id, layout, best.z, best.rotation, True)
        # Add the deepest of the missed witnesses first.
        depths = everything.depths(layout.shape_at(best.z), missed)
        ranked = [missed[i] for i in np.argsort(-depths, kind="stable")]
        active = sorted(set(active) | set(ranked[: max(config.initial_witnesses, 1)]))

    best_solution = None
    if best is not None:
        best_solution = _solution(problem.obstacle_id, layout, best.z, best.rotation, False)
    raise NoFeasibleSolutionFound(
        f"No certified displacement found for obstacle {problem.obstacle_id!r}",
        obstacle_id=problem.obstacle_id,
        best=best_solution,
    )


@dataclass
class ResolveResult:
    solutions: List[DisplacementSolution]
    total_displacement_magnitude: float
    displaced_count: int
    unresolved_ids: List[str] = field(default_factory=list)


def metric_total_displacement(solutions: Sequence[DisplacementSolution]) -> float:
    """Σ centroid shifts of the certified solutions."""
    return float(sum(s.centroid_shift for s in solutions if s.feasible))


def resolve_all(
    trajectory: Trajectory,
    scenario: Scenario,
    settings: Optional[NlpSettings] = None,
    config: Optional[DisplacementConfig] = None,
    on_solution: Optional[Callable[[DisplacementSolution], None]] = None,
) -> ResolveResult:
    """
    Displace every obstacle the trajectory's swept footprint fails to clear.

    Failures are reported per obstacle as infeasible solutions carrying the
    best attempt; the remaining obstacles are still solved. Non-movable
    obstacles that overlap are reported unresolved without an attempt.
    """
    config = config or DisplacementConfig()
    sweep = sweep_footprints(trajectory, scenario.robot, config.witness_resolution)
    solutions: List[DisplacementSolution] = []
    unresolved: List[str] = []
    for ob in scenario.obstacles:
        hits = sweep.violations(ob.shape, config.clearance_slack)
        if not hits:
            continue
        if not ob.movable:
            logger.warning("fixed obstacle %s overlaps the trajectory", ob.id)
            unresolved.append(ob.id)
            continue
        witnesses = [sweep.shapes[i] for i in hits]
        reach = 2.0 * _enclosing_diameter(ob.shape) + max(_enclosing_diameter(w) for w in witnesses)
        hit_set = set(hits)
        guards = [sweep.shapes[i] for i in sweep.near(ob.shape, reach) if i not in hit_set]
        problem = DisplacementProblem.create(
            ob.id, ob.shape, witnesses, ob.motion, guards=guards, config=config
        )
        try:
            solution = displace(problem, settings, config)
        except NoFeasibleSolutionFound as e:
            logger.warning("%s", e)
            unresolved.append(ob.id)
            solution = e.best or DisplacementSolution(
                ob.id, ob.shape, ob.shape, 0.0, 0.0, 0.0, False
            )
        solutions.append(solution)
        if on_solution is not None:
            on_solution(solution)

    certified = [s for s in solutions if s.feasible]
    result = ResolveResult(
        solutions=solutions,
        total_displacement_magnitude=metric_total_displacement(solutions),
        displaced_count=sum(1 for s in certified if s.centroid_shift > 0 or s.rotation != 0),
        unresolved_ids=unresolved,
    )
    logger.info(
        "stage 2 displaced %d obstacles, total magnitude %.4f m, %d unresolved",
        result.displaced_count,
        result.total_displacement_magnitude,
        len(unresolved),
    )
    return result
