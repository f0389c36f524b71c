"""
Bundled scenarios.

Obstacle layouts are authored scene reconstructions: a dense field of circles
for the L-shaped robot, a room with furniture for a vacuum robot, and a few
small corridors that keep the test suite fast. Every builder is deterministic.
"""

import math
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from cdplan.core.geometry import Circle, CircleCover, ConvexPolygon
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
    default_cover,
)

BUILTIN_PREFIX = "builtin:"


def _planar_model(speed: float = 1.0, turn: float = 1.0, dt: float = 0.1) -> DynamicsModel:
    return DynamicsModel(
        ModelKind.PLANAR_VELOCITY, (-speed, -speed, -turn), (speed, speed, turn), dt
    )


def _circle_robot(
    radius: float, model: DynamicsModel, start: RobotState, goal: RobotState
) -> RobotSpec:
    return RobotSpec(model, (), CircleCover((Circle.at(0.0, 0.0, radius),)), start, goal)


def _polygon_robot(
    polygons: Sequence[ConvexPolygon], model: DynamicsModel, start: RobotState, goal: RobotState
) -> RobotSpec:
    cover = CircleCover(tuple(c for p in polygons for c in default_cover(p).circles))
    return RobotSpec(model, tuple(polygons), cover, start, goal)


def _circles(prefix: str, specs: Sequence[Tuple[float, float, float]], **kwargs) -> List[ObstacleSpec]:
    return [
        ObstacleSpec.create(f"{prefix}{i}", Circle.at(x, y, r), **kwargs)
        for i, (x, y, r) in enumerate(specs)
    ]


def _box(obstacle_id: str, w: float, h: float, cx: float, cy: float, angle: float = 0.0, **kwargs):
    shape = ConvexPolygon.rectangle(w, h, cx, cy)
    if angle:
        c, s = math.cos(angle), math.sin(angle)
        shape = ConvexPolygon.from_coords(
            [
                (cx + c * (v.x - cx) - s * (v.y - cy), cy + s * (v.x - cx) + c * (v.y - cy))
                for v in shape.vertices
            ]
        )
    return ObstacleSpec.create(obstacle_id, shape, **kwargs)


def _field(seed: int, count: int) -> List[Tuple[float, float, float]]:
    """Jittered 9 x 6 lattice of circles filling x in [2, 8], y in [-2, 2]."""
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(9):
        for j in range(6):
            jitter = rng.uniform(-0.1, 0.1, size=2)
            radius = float(rng.uniform(0.26, 0.32))
            specs.append((2.0 + 0.75 * i + float(jitter[0]), -2.0 + 0.8 * j + float(jitter[1]), radius))
    return specs[:count]


def l_shaped_robot_polygons() -> List[ConvexPolygon]:
    """A long foot along x and a short leg at its rear end."""
    return [
        ConvexPolygon.from_coords([(-0.3, -0.25), (0.3, -0.25), (0.3, -0.05), (-0.3, -0.05)]),
        ConvexPolygon.from_coords([(-0.3, -0.05), (-0.1, -0.05), (-0.1, 0.35), (-0.3, 0.35)]),
    ]


def abcd(mi: float = 0.5, horizon: int = 21, mode: CostKind = CostKind.MCD) -> Scenario:
    """L-shaped robot crossing a field of 53 movable circles from left to right."""
    robot = _polygon_robot(
        l_shaped_robot_polygons(),
        _planar_model(speed=2.5, turn=2.5),
        RobotState(0.0, 0.0, 0.0),
        RobotState(10.0, 0.0, 0.0),
    )
    planner = PlannerConfig(
        horizon=horizon,
        max_steps=250,
        goal_tolerance=0.1,
        weights=Weights(Mx=0.5, Mi=mi, Mu=0.1, Mg=10.0),
        mode=OverlapCostMode(mode),
        state_reference="goal",
    )
    return Scenario(
        "abcd",
        DomainBounds(-1.0, 11.0, -2.5, 2.5),
        robot,
        tuple(_circles("c", _field(seed=53, count=53))),
        planner,
    )


def abcd_circle() -> Scenario:
    """Circular robot with the down-cross-turn model in the same kind of field."""
    model = DynamicsModel(
        ModelKind.DOWN_CROSS_TURN, (-1.5, -1.5, -math.pi), (1.5, 1.5, math.pi), dt=1.0
    )
    robot = _circle_robot(0.3, model, RobotState(0.0, 0.0, 0.0), RobotState(10.0, 0.0, 0.0))
    planner = PlannerConfig(
        horizon=8,
        max_steps=40,
        goal_tolerance=0.1,
        weights=Weights(Mx=0.2, Mi=0.5, Mu=0.1, Mg=10.0),
        state_reference="goal",
    )
    return Scenario(
        "abcd_circle",
        DomainBounds(-1.0, 11.0, -2.5, 2.5),
        robot,
        tuple(_circles("c", _field(seed=6, count=30))),
        planner,
    )


def roomba() -> Scenario:
    """Vacuum robot crossing a furnished room; one block of wall cannot move."""
    robot = _circle_robot(
        0.17, _planar_model(speed=1.0), RobotState(0.4, 3.6, 0.0), RobotState(4.6, 0.4, 0.0)
    )
    obstacles = [
        _box("table", 1.2, 0.8, 2.5, 2.0),
        _box("chair1", 0.45, 0.45, 1.6, 2.9),
        _box("chair2", 0.45, 0.45, 3.4, 1.1),
        _box("couch", 1.6, 0.6, 1.2, 1.0, angle=0.3),
        _box("shelf", 0.4, 1.2, 4.2, 2.6, movable=False),
        ObstacleSpec.create("bin", Circle.at(3.6, 3.2, 0.25)),
        ObstacleSpec.create("plant", Circle.at(0.9, 2.2, 0.3)),
    ]
    planner = PlannerConfig(
        horizon=15,
        max_steps=150,
        weights=Weights(Mx=0.5, Mi=0.5, Mu=0.1, Mg=10.0),
        state_reference="goal",
    )
    return Scenario("roomba", DomainBounds(0.0, 5.0, 0.0, 4.0), robot, tuple(obstacles), planner)


def world19() -> Scenario:
    """Nineteen mixed circles, boxes and triangles between start and goal."""
    robot = _polygon_robot(
        [ConvexPolygon.rectangle(0.5, 0.4)],
        _planar_model(speed=1.5, turn=1.5),
        RobotState(0.5, 3.0, 0.0),
        RobotState(9.5, 3.0, 0.0),
    )
    obstacles: List[ObstacleSpec] = []
    obstacles += _circles(
        "c",
        [(2.0, 2.4, 0.4), (2.2, 3.6, 0.35), (4.0, 1.6, 0.3), (4.4, 4.4, 0.45), (6.1, 2.9, 0.4),
         (7.6, 1.8, 0.3), (8.0, 4.1, 0.35)],
    )
    boxes = [(1.0, 0.5, 3.0, 3.0, 0.0), (0.6, 0.6, 3.4, 4.6, 0.4), (0.8, 0.4, 5.0, 3.2, 1.2),
             (0.5, 0.9, 5.2, 1.6, 0.0), (0.7, 0.7, 6.8, 4.2, 0.8), (1.1, 0.4, 7.0, 3.0, -0.3),
             (0.5, 0.5, 8.6, 2.6, 0.2)]
    obstacles += [_box(f"b{i}", *spec[:4], angle=spec[4]) for i, spec in enumerate(boxes)]
    triangles = [(3.9, 2.8), (5.8, 4.5), (6.3, 1.3), (8.9, 3.5), (2.9, 1.4)]
    for i, (x, y) in enumerate(triangles):
        tri = ConvexPolygon.from_coords([(x - 0.35, y - 0.3), (x + 0.35, y - 0.3), (x, y + 0.35)])
        obstacles.append(ObstacleSpec.create(f"t{i}", tri))
    planner = PlannerConfig(
        horizon=15,
        max_steps=200,
        weights=Weights(Mx=0.5, Mi=0.5, Mu=0.1, Mg=10.0),
        state_reference="goal",
    )
    return Scenario("world19", DomainBounds(0.0, 10.0, 0.0, 6.0), robot, tuple(obstacles), planner)


def two_rooms(mi: float = 0.5, weighted: bool = True) -> Scenario:
    """
    Two rooms joined by a cluttered doorway, solved as MCR.

    Six large obstacles are ten times harder to move when `weighted`.
    """
    robot = _circle_robot(
        0.2, _planar_model(speed=1.0), RobotState(1.0, 2.0, 0.0), RobotState(9.0, 2.0, 0.0)
    )
    heavy = 10.0 if weighted else 1.0
    obstacles = [
        _box("wall_low", 0.3, 1.3, 5.0, 0.65, movable=False),
        _box("wall_high", 0.3, 1.3, 5.0, 3.35, movable=False),
        _box("sofa", 1.4, 0.6, 3.5, 2.0, weight=heavy),
        _box("desk", 1.0, 0.8, 6.6, 2.2, weight=heavy),
        _box("cabinet", 0.6, 1.0, 2.2, 1.0, weight=heavy),
        _box("bed", 1.6, 1.0, 8.0, 3.2, weight=heavy),
        _box("bench", 1.2, 0.4, 7.4, 1.0, weight=heavy),
        _box("dresser", 0.5, 1.2, 2.6, 3.2, weight=heavy),
    ]
    obstacles += _circles(
        "s",
        [(4.4, 1.7, 0.22), (4.4, 2.3, 0.22), (5.0, 2.0, 0.25), (5.6, 1.8, 0.2), (5.6, 2.4, 0.2),
         (3.0, 2.9, 0.2), (6.2, 1.4, 0.2), (7.8, 2.0, 0.25), (8.4, 1.4, 0.2)],
    )
    planner = PlannerConfig(
        horizon=10,
        max_steps=200,
        weights=Weights(Mx=0.5, Mi=mi, Mu=0.1, Mg=10.0),
        mode=OverlapCostMode(CostKind.MCR),
        state_reference="goal",
    )
    return Scenario("two_rooms", DomainBounds(0.0, 10.0, 0.0, 4.0), robot, tuple(obstacles), planner)


def corridor(mode: CostKind = CostKind.MCD) -> Scenario:
    """A short corridor blocked by one box flanked by two circles."""
    robot = _circle_robot(
        0.2, _planar_model(speed=1.0), RobotState(0.4, 0.0, 0.0), RobotState(3.6, 0.0, 0.0)
    )
    obstacles = [
        _box("block", 0.4, 0.4, 2.0, 0.0),
        ObstacleSpec.create("upper", Circle.at(2.0, 0.65, 0.3)),
        ObstacleSpec.create("lower", Circle.at(2.0, -0.65, 0.3)),
    ]
    planner = PlannerConfig(
        horizon=10,
        max_steps=80,
        weights=Weights(Mx=0.5, Mi=0.5, Mu=0.1, Mg=10.0),
        mode=OverlapCostMode(mode),
        state_reference="goal",
    )
    return Scenario("corridor", DomainBounds(0.0, 4.0, -1.0, 1.0), robot, tuple(obstacles), planner)


def gap() -> Scenario:
    """A corridor whose two obstacles leave a free gap on the straight line."""
    robot = _circle_robot(
        0.15, _planar_model(speed=1.0), RobotState(0.4, 0.0, 0.0), RobotState(3.6, 0.0, 0.0)
    )
    obstacles = [
        ObstacleSpec.create("upper", Circle.at(2.0, 0.6, 0.25)),
        ObstacleSpec.create("lower", Circle.at(2.0, -0.6, 0.25)),
    ]
    planner = PlannerConfig(
        horizon=10,
        max_steps=80,
        weights=Weights(Mx=0.5, Mi=0.5, Mu=0.1, Mg=10.0),
        state_reference="goal",
    )
    return Scenario("gap", DomainBounds(0.0, 4.0, -1.0, 1.0), robot, tuple(obstacles), planner)


SCENARIOS: Dict[str, Callable[[], Scenario]] = {
    "abcd": abcd,
    "abcd_circle": abcd_circle,
    "roomba": roomba,
    "world19": world19,
    "two_rooms": two_rooms,
    "corridor": corridor,
    "gap": gap,
}


def get_scenario(name: str) -> Scenario:
    """Build a bundled scenario by name; a `builtin:` prefix is accepted."""
    key = name[len(BUILTIN_PREFIX):] if name.startswith(BUILTIN_PREFIX) else name
    try:
        return SCENARIOS[key]()
    except KeyError:
        raise KeyError(
            f"Unknown scenario {name!r}; available: {', '.join(sorted(SCENARIOS))}"
        ) from None
