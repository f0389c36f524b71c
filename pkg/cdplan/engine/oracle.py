"""
Brute-force grid search for the minimal rigid displacement of one obstacle.

Used to check the displacement NLP. Grid points are visited in order of
increasing objective, so the first one that clears every witness is the
grid optimum. For a fixed rotation the blocked translations are the
Minkowski difference witness - obstacle, which is tested for all grid
translations at once.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from cdplan.core.errors import NoFeasibleInWindow
from cdplan.core.geometry import (
    CLEARANCE_SLACK,
    Circle,
    ConvexPolygon,
    Point2,
    area_centroid,
    min_enclosing_circle,
)
from cdplan.core.ir import MotionRestriction, Shape

logger = logging.getLogger(__name__)


@dataclass
class OracleResult:
    dx: float
    dy: float
    dtheta: float
    magnitude: float
    objective: float
    shape: Shape


def _points(shape: Shape) -> Tuple[np.ndarray, float]:
    if isinstance(shape, Circle):
        return np.array([[shape.center.x, shape.center.y]]), shape.radius
    return np.asarray(shape.array, dtype=float), 0.0


def _hull(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull vertices; 1 or 2 points for degenerate sets."""
    unique = np.unique(np.round(points, 12), axis=0)
    if len(unique) >= 3:
        try:
            return unique[ConvexHull(unique).vertices]
        except QhullError:
            pass
    if len(unique) == 1:
        return unique
    # Collinear: keep the two extreme points along the spread direction.
    direction = unique[-1] - unique[0]
    proj = unique @ direction
    return unique[[int(np.argmin(proj)), int(np.argmax(proj))]]


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(p))
    nearest = a + t[:, None] * ab
    return np.linalg.norm(p - nearest, axis=1)


def _hull_distance(p: np.ndarray, hull: np.ndarray) -> np.ndarray:
    """Distance from each row of p to the convex hull (0 inside)."""
    if len(hull) == 1:
        return np.linalg.norm(p - hull[0], axis=1)
    if len(hull) == 2:
        return _segment_distance(p, hull[0], hull[1])
    nxt = np.roll(hull, -1, axis=0)
    edges = nxt - hull
    rel = p[:, None, :] - hull[None, :, :]
    cross = edges[None, :, 0] * rel[..., 1] - edges[None, :, 1] * rel[..., 0]
    inside = np.all(cross >= 0.0, axis=1)
    dist = np.min(
        np.stack([_segment_distance(p, a, b) for a, b in zip(hull, nxt)], axis=1), axis=1
    )
    return np.where(inside, 0.0, dist)


def _place(points: np.ndarray, angle: float, pivot: np.ndarray) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return (points - pivot) @ rot.T + pivot


def _rebuild(shape: Shape, placed: np.ndarray) -> Shape:
    if isinstance(shape, Circle):
        return Circle(Point2(float(placed[0, 0]), float(placed[0, 1])), shape.radius)
    return ConvexPolygon.from_coords([tuple(p) for p in placed], normalize=False)


def _grid(half: float, resolution: float) -> np.ndarray:
    count = int(math.floor(half / resolution + 1e-9))
    return np.arange(-count, count + 1) * resolution


def oracle_grid_displacement(
    obstacle: Shape,
    witnesses: Sequence[Shape],
    resolution: float = 0.01,
    rotation_resolution: float = 0.02,
    window: Optional[float] = None,
    restriction: MotionRestriction = MotionRestriction.FREE,
    slack: float = CLEARANCE_SLACK,
) -> OracleResult:
    """
    Best grid displacement (dx, dy, dθ) of `obstacle` clearing every witness.

    Rotations are about the area centroid; the objective is the sum of squared
    vertex displacements. The translation window defaults to ±3 obstacle
    enclosing-circle diameters.
    """
    if not (resolution > 0 and rotation_resolution > 0):
        raise ValueError("resolutions must be positive")
    restriction = MotionRestriction(restriction)
    base, radius = _points(obstacle)
    if isinstance(obstacle, Circle):
        pivot = base[0]
    else:
        pivot = area_centroid(base)
    if window is None:
        if isinstance(obstacle, Circle):
            diameter = 2.0 * radius
        else:
            diameter = 2.0 * min_enclosing_circle(obstacle).radius
        window = 3.0 * diameter

    if isinstance(obstacle, Circle) or restriction == MotionRestriction.TRANSLATE_ONLY:
        angles = np.zeros(1)
    else:
        steps = int(math.floor(math.pi / rotation_resolution))
        angles = np.arange(-steps, steps + 1) * rotation_resolution
    offsets = [np.sum((_place(base, a, pivot) - base) ** 2) for a in angles]
    order = np.argsort(offsets, kind="stable")

    witness_data = [_points(w) for w in witnesses]
    axis = _grid(window, resolution)
    if restriction == MotionRestriction.ROTATE_ONLY:
        tx, ty = np.zeros(1), np.zeros(1)
    else:
        tx, ty = (g.reshape(-1) for g in np.meshgrid(axis, axis, indexing="ij"))
    radial = tx * tx + ty * ty
    count = len(base)

    best: Optional[OracleResult] = None
    for index in order:
        angle, offset = float(angles[index]), float(offsets[index])
        if best is not None and offset >= best.objective:
            break
        objective = count * radial + offset
        keep = objective < (best.objective if best is not None else math.inf)
        if not np.any(keep):
            continue
        placed = _place(base, angle, pivot)
        translations = np.stack([tx[keep], ty[keep]], axis=1)
        values = objective[keep]
        clear = np.ones(len(translations), dtype=bool)
        for wp, wr in witness_data:
            blocked = _hull((wp[:, None, :] - placed[None, :, :]).reshape(-1, 2))
            clear &= _hull_distance(translations, blocked) >= radius + wr + slack
        if not np.any(clear):
            continue
        candidates = np.flatnonzero(clear)
        pick = candidates[np.argmin(values[candidates])]
        dx, dy = (float(v) for v in translations[pick])
        shape = _rebuild(obstacle, placed + np.array([dx, dy]))
        best = OracleResult(
            dx=dx,
            dy=dy,
            dtheta=angle,
            magnitude=math.hypot(dx, dy),
            objective=float(values[pick]),
            shape=shape,
        )

    if best is None:
        raise NoFeasibleInWindow(
            f"No grid displacement within ±{window:.3f} m clears all {len(witnesses)} witnesses"
        )
    logger.debug(
        "oracle best: dx=%.4f dy=%.4f dtheta=%.4f objective=%.6g",
        best.dx,
        best.dy,
        best.dtheta,
        best.objective,
    )
    return best
