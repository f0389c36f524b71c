"""
Planar geometry for the constraint displacement planner.

This module defines the shapes used throughout cdplan and the predicates
built on them:
- Shapes: Point2, Circle, Segment, ConvexPolygon, CircleCover
- Overlap measure between circles and circle covers
- Minimum enclosing circles and slab-based multi-circle covers
- Intersection predicates (exact, used as feasibility certificates) and the
  parametric forms they are compared against

All values are immutable; every function is pure.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from cdplan.core.errors import ParallelSegments

# Default ε added to the numerators of the segment parameters.
SEGMENT_EPSILON = 1e-8
# Denominators at or below this magnitude are treated as parallel.
PARALLEL_TOLERANCE = 1e-12
# Default clearance a displaced obstacle must keep from every witness.
CLEARANCE_SLACK = 1e-6

_MEC_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Point coordinates must be finite, got ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def __getitem__(self, index: int) -> float:
        return (self.x, self.y)[index]

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class Circle:
    center: Point2
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"Circle radius must be positive, got {self.radius}")

    @classmethod
    def at(cls, x: float, y: float, radius: float) -> "Circle":
        return cls(Point2(float(x), float(y)), float(radius))

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def contains(self, point: Point2, tolerance: float = 1e-9) -> bool:
        return (
            math.hypot(point.x - self.center.x, point.y - self.center.y)
            <= self.radius + tolerance
        )


@dataclass(frozen=True)
class Segment:
    a: Point2
    b: Point2

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("Segment endpoints must differ")

    @property
    def length(self) -> float:
        return math.hypot(self.a.x - self.b.x, self.a.y - self.b.y)


@dataclass(frozen=True)
class ConvexPolygon:
    """
    A strictly convex polygon with counter-clockwise vertices.

    Use `from_coords` to build one from raw coordinates; it can normalize a
    clockwise winding instead of rejecting it.
    """

    vertices: Tuple[Point2, ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise ValueError("A polygon needs at least 3 vertices")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("Polygon has repeated vertices")
        turns = _turn_crosses(self.array)
        scale = float(np.max(np.ptp(self.array, axis=0))) ** 2
        if np.any(turns <= 1e-12 * scale):
            if np.all(turns < 0):
                raise ValueError("Polygon vertices must be counter-clockwise")
            raise ValueError("Polygon must be strictly convex")
        if not math.isclose(_total_turning(self.array), 2 * math.pi, abs_tol=1e-6):
            raise ValueError("Polygon must be simple (winds more than once)")

    @classmethod
    def from_coords(
        cls, coords: Iterable[Sequence[float]], normalize: bool = True
    ) -> "ConvexPolygon":
        points = [Point2(float(x), float(y)) for x, y in coords]
        if normalize and len(points) >= 3 and signed_area(points) < 0:
            points.reverse()
        return cls(tuple(points))

    @classmethod
    def rectangle(
        cls, width: float, height: float, cx: float = 0.0, cy: float = 0.0
    ) -> "ConvexPolygon":
        hw, hh = width / 2.0, height / 2.0
        return cls.from_coords(
            [(cx - hw, cy - hh), (cx + hw, cy - hh), (cx + hw, cy + hh), (cx - hw, cy + hh)]
        )

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.array([[p.x, p.y] for p in self.vertices], dtype=float)
        arr.setflags(write=False)
        return arr

    @property
    def edges(self) -> List[Segment]:
        n = len(self.vertices)
        return [Segment(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def centroid(self) -> Point2:
        return polygon_centroid(self)

    def contains(self, point: Point2) -> bool:
        return point_in_polygon(self, point)


@dataclass(frozen=True)
class CircleCover:
    circles: Tuple[Circle, ...]

    def __post_init__(self):
        if not self.circles:
            raise ValueError("A circle cover needs at least one circle")

    @cached_property
    def centers(self) -> np.ndarray:
        arr = np.array([[c.center.x, c.center.y] for c in self.circles], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def radii(self) -> np.ndarray:
        arr = np.array([c.radius for c in self.circles], dtype=float)
        arr.setflags(write=False)
        return arr

    @property
    def area(self) -> float:
        return sum(c.area for c in self.circles)

    def contains(self, point: Point2, tolerance: float = 1e-9) -> bool:
        return any(c.contains(point, tolerance) for c in self.circles)


# ---------------------------------------------------------------------------
# Basic polygon helpers
# ---------------------------------------------------------------------------


def _turn_crosses(arr: np.ndarray) -> np.ndarray:
    edges = np.roll(arr, -1, axis=0) - arr
    nxt = np.roll(edges, -1, axis=0)
    return edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]


def _total_turning(arr: np.ndarray) -> float:
    edges = np.roll(arr, -1, axis=0) - arr
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    dot = np.sum(edges * nxt, axis=1)
    return float(np.sum(np.arctan2(cross, dot)))


def signed_area(points: Sequence[Point2]) -> float:
    """Shoelace area; positive for counter-clockwise order."""
    total = 0.0
    n = len(points)
    for i in range(n):
        p, q = points[i], points[(i + 1) % n]
        total += p.x * q.y - q.x * p.y
    return total / 2.0


def area_centroid(points: np.ndarray) -> np.ndarray:
    """Area centroid of the polygon with vertices `points` (n x 2, either winding)."""
    arr = np.asarray(points, dtype=float)
    nxt = np.roll(arr, -1, axis=0)
    cross = arr[:, 0] * nxt[:, 1] - nxt[:, 0] * arr[:, 1]
    area = cross.sum() / 2.0
    return np.sum((arr + nxt) * cross[:, None], axis=0) / (6.0 * area)


def polygon_centroid(p: ConvexPolygon) -> Point2:
    cx, cy = area_centroid(p.array)
    return Point2(float(cx), float(cy))


def transform_polygon(p: ConvexPolygon, angle: float, dx: float, dy: float) -> ConvexPolygon:
    """Rotate about the origin by `angle`, then translate by (dx, dy)."""
    c, s = math.cos(angle), math.sin(angle)
    return ConvexPolygon(
        tuple(Point2(c * v.x - s * v.y + dx, s * v.x + c * v.y + dy) for v in p.vertices)
    )


def transform_circle(circle: Circle, angle: float, dx: float, dy: float) -> Circle:
    c, s = math.cos(angle), math.sin(angle)
    x, y = circle.center.x, circle.center.y
    return Circle(Point2(c * x - s * y + dx, s * x + c * y + dy), circle.radius)


def rotate_polygon_about(p: ConvexPolygon, angle: float, pivot: Point2) -> ConvexPolygon:
    c, s = math.cos(angle), math.sin(angle)
    return ConvexPolygon(
        tuple(
            Point2(
                pivot.x + c * (v.x - pivot.x) - s * (v.y - pivot.y),
                pivot.y + s * (v.x - pivot.x) + c * (v.y - pivot.y),
            )
            for v in p.vertices
        )
    )


def polygon_circumradius(p: ConvexPolygon) -> float:
    """Radius of the minimum enclosing circle."""
    return min_enclosing_circle(p).radius


# ---------------------------------------------------------------------------
# Overlap measure
# ---------------------------------------------------------------------------


def overlap_measure(robot: Circle, obstacle: Circle) -> float:
    """
    Penetration depth between two circles.

    Zero when the circles are disjoint or touch; otherwise the distance the
    obstacle center has to travel along the center line to clear the robot.
    """
    distance = math.hypot(robot.center.x - obstacle.center.x, robot.center.y - obstacle.center.y)
    return max(0.0, robot.radius + obstacle.radius - distance)


def overlap_measure_cover(robot: CircleCover, obstacle: CircleCover) -> float:
    """Sum of overlap_measure over every robot-circle / obstacle-circle pair."""
    diff = robot.centers[:, None, :] - obstacle.centers[None, :, :]
    distance = np.hypot(diff[..., 0], diff[..., 1])
    depth = robot.radii[:, None] + obstacle.radii[None, :] - distance
    return float(np.sum(np.maximum(depth, 0.0)))


# ---------------------------------------------------------------------------
# Enclosing circles
# ---------------------------------------------------------------------------


def _circle_two(a: Tuple[float, float], b: Tuple[float, float]) -> Tuple[float, float, float]:
    cx, cy = (a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0
    return cx, cy, max(math.hypot(a[0] - cx, a[1] - cy), math.hypot(b[0] - cx, b[1] - cy))


def _circumcircle(
    a: Tuple[float, float], b: Tuple[float, float], c: Tuple[float, float]
) -> Optional[Tuple[float, float, float]]:
    ox = (min(a[0], b[0], c[0]) + max(a[0], b[0], c[0])) / 2.0
    oy = (min(a[1], b[1], c[1]) + max(a[1], b[1], c[1])) / 2.0
    ax, ay = a[0] - ox, a[1] - oy
    bx, by = b[0] - ox, b[1] - oy
    cx, cy = c[0] - ox, c[1] - oy
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    x = ox + (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    y = oy + (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    r = max(math.hypot(x - p[0], y - p[1]) for p in (a, b, c))
    return x, y, r


def _inside(circle: Optional[Tuple[float, float, float]], p: Tuple[float, float]) -> bool:
    return (
        circle is not None
        and math.hypot(p[0] - circle[0], p[1] - circle[1]) <= circle[2] * (1 + _MEC_TOLERANCE)
    )


def min_enclosing_circle_points(points: Sequence[Tuple[float, float]]) -> Circle:
    """
    Smallest circle containing all points (randomized incremental algorithm).

    The shuffle uses a fixed seed, so the result is deterministic.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise ValueError("Cannot enclose an empty point set")
    pts = [pts[i] for i in np.random.default_rng(0).permutation(len(pts))]
    circle: Optional[Tuple[float, float, float]] = None
    for i, p in enumerate(pts):
        if circle is None or not _inside(circle, p):
            circle = _mec_one_point(pts[: i + 1], p)
    assert circle is not None
    return Circle(Point2(circle[0], circle[1]), max(circle[2], 1e-12))


def _mec_one_point(points, p):
    circle = (p[0], p[1], 0.0)
    for i, q in enumerate(points):
        if not _inside(circle, q):
            if circle[2] == 0.0:
                circle = _circle_two(p, q)
            else:
                circle = _mec_two_points(points[: i + 1], p, q)
    return circle


def _mec_two_points(points, p, q):
    base = _circle_two(p, q)
    left = None
    right = None
    px, py = p
    qx, qy = q
    for r in points:
        if _inside(base, r):
            continue
        cross = (qx - px) * (r[1] - py) - (qy - py) * (r[0] - px)
        c = _circumcircle(p, q, r)
        if c is None:
            continue
        side = (qx - px) * (c[1] - py) - (qy - py) * (c[0] - px)
        if cross > 0.0 and (
            left is None
            or side > (qx - px) * (left[1] - py) - (qy - py) * (left[0] - px)
        ):
            left = c
        elif cross < 0.0 and (
            right is None
            or side < (qx - px) * (right[1] - py) - (qy - py) * (right[0] - px)
        ):
            right = c
    if left is None and right is None:
        return base
    if left is None:
        return right
    if right is None:
        return left
    return left if left[2] <= right[2] else right


def min_enclosing_circle(p: ConvexPolygon) -> Circle:
    return min_enclosing_circle_points([(v.x, v.y) for v in p.vertices])


def principal_axis(p: ConvexPolygon) -> np.ndarray:
    """Unit vector along the direction of largest vertex spread."""
    centered = p.array - p.array.mean(axis=0)
    cov = centered.T @ centered
    _, vectors = np.linalg.eigh(cov)
    axis = vectors[:, -1]
    # Fix the sign so the result does not depend on the eigensolver.
    if axis[0] < 0 or (axis[0] == 0 and axis[1] < 0):
        axis = -axis
    return axis


def _clip_halfplane(points: List[np.ndarray], normal: np.ndarray, offset: float) -> List[np.ndarray]:
    """Keep the part of a convex polygon with normal·p <= offset."""
    out: List[np.ndarray] = []
    n = len(points)
    for i in range(n):
        cur, nxt = points[i], points[(i + 1) % n]
        dc, dn = float(normal @ cur) - offset, float(normal @ nxt) - offset
        if dc <= 0:
            out.append(cur)
        if (dc < 0 < dn) or (dn < 0 < dc):
            t = dc / (dc - dn)
            out.append(cur + t * (nxt - cur))
    return out


def k_circle_cover(p: ConvexPolygon, k: int) -> CircleCover:
    """
    Cover a polygon with k circles.

    The polygon is cut into k equal-width slabs perpendicular to its principal
    axis and each slab gets its own minimum enclosing circle.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k == 1:
        return CircleCover((min_enclosing_circle(p),))
    axis = principal_axis(p)
    proj = p.array @ axis
    lo, hi = float(proj.min()), float(proj.max())
    width = (hi - lo) / k
    circles = []
    for i in range(k):
        start, stop = lo + i * width, lo + (i + 1) * width
        piece = [row.copy() for row in p.array]
        piece = _clip_halfplane(piece, axis, stop)
        piece = _clip_halfplane(piece, -axis, -start)
        circles.append(min_enclosing_circle_points([tuple(q) for q in piece]))
    return CircleCover(tuple(circles))


# ---------------------------------------------------------------------------
# Segment predicates
# ---------------------------------------------------------------------------


def line_circle_discriminant(
    a: Sequence[float], b: Sequence[float], center: Sequence[float], radius: float
) -> float:
    """
    Reduced discriminant of |b + t(a - b) - center|² = r².

    Negative exactly when the infinite line through a and b misses the circle.
    """
    dx, dy = a[0] - b[0], a[1] - b[1]
    ex, ey = b[0] - center[0], b[1] - center[1]
    de = dx * ex + dy * ey
    return de * de - (dx * dx + dy * dy) * (ex * ex + ey * ey - radius * radius)


def line_circle_no_intersection(s: Segment, c: Circle) -> bool:
    """
    True iff the line through the segment does not meet the circle.

    Conservative for the segment itself: parameters outside [0, 1] are not
    treated specially.
    """
    return (
        line_circle_discriminant(
            (s.a.x, s.a.y), (s.b.x, s.b.y), (c.center.x, c.center.y), c.radius
        )
        < 0.0
    )


def segment_params_raw(
    p1: Sequence[float],
    p2: Sequence[float],
    p3: Sequence[float],
    p4: Sequence[float],
    epsilon: float = SEGMENT_EPSILON,
) -> Tuple[float, float, float]:
    """
    Closed-form t, s and the shared denominator for two parametric segments.

    Points are p2 + t(p1 - p2) and p4 + s(p3 - p4). No parallel check.
    """
    x1, y1 = p1[0], p1[1]
    x2, y2 = p2[0], p2[1]
    x3, y3 = p3[0], p3[1]
    x4, y4 = p4[0], p4[1]
    den = -(x1 - x2) * (y3 - y4) + (y1 - y2) * (x3 - x4)
    t_num = -(y3 - y4) * (x4 - x2) + (x3 - x4) * (y4 - y2) + epsilon
    s_num = -(y1 - y2) * (x4 - x2) + (x1 - x2) * (y4 - y2) + epsilon
    if den == 0.0:
        return math.inf, math.inf, 0.0
    return t_num / den, s_num / den, den


def segment_params(
    s1: Segment, s2: Segment, epsilon: float = SEGMENT_EPSILON
) -> Tuple[float, float]:
    """
    Parameters (t, s) at which the lines of s1 and s2 meet.

    t runs from s1.b (t = 0) to s1.a (t = 1), likewise s on s2. The segments
    properly intersect iff both lie in [0, 1].
    """
    t, s, den = segment_params_raw(s1.a, s1.b, s2.a, s2.b, epsilon)
    if abs(den) <= PARALLEL_TOLERANCE:
        raise ParallelSegments(f"Segments are parallel (denominator {den:.3e})")
    return t, s


def _orient(a: Point2, b: Point2, c: Point2) -> int:
    v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
    return int(v > 0) - int(v < 0)


def _on_segment(a: Point2, b: Point2, p: Point2) -> bool:
    return min(a.x, b.x) <= p.x <= max(a.x, b.x) and min(a.y, b.y) <= p.y <= max(a.y, b.y)


def segments_intersect(s1: Segment, s2: Segment) -> bool:
    """Orientation-based segment intersection; touching counts."""
    o1 = _orient(s1.a, s1.b, s2.a)
    o2 = _orient(s1.a, s1.b, s2.b)
    o3 = _orient(s2.a, s2.b, s1.a)
    o4 = _orient(s2.a, s2.b, s1.b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(s1.a, s1.b, s2.a):
        return True
    if o2 == 0 and _on_segment(s1.a, s1.b, s2.b):
        return True
    if o3 == 0 and _on_segment(s2.a, s2.b, s1.a):
        return True
    if o4 == 0 and _on_segment(s2.a, s2.b, s1.b):
        return True
    return False


def point_segment_distance(p: Point2, s: Segment) -> float:
    dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
    t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / (dx * dx + dy * dy)
    t = min(1.0, max(0.0, t))
    return math.hypot(s.a.x + t * dx - p.x, s.a.y + t * dy - p.y)


def segment_distance(s1: Segment, s2: Segment) -> float:
    if segments_intersect(s1, s2):
        return 0.0
    return min(
        point_segment_distance(s1.a, s2),
        point_segment_distance(s1.b, s2),
        point_segment_distance(s2.a, s1),
        point_segment_distance(s2.b, s1),
    )


# ---------------------------------------------------------------------------
# Polygon predicates
# ---------------------------------------------------------------------------


def point_in_polygon(p: ConvexPolygon, point: Point2) -> bool:
    """Boundary-inclusive containment for a counter-clockwise convex polygon."""
    arr = p.array
    edges = np.roll(arr, -1, axis=0) - arr
    rel = np.array([point.x, point.y]) - arr
    cross = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
    return bool(np.all(cross >= 0.0))


def _axes(arr: np.ndarray) -> np.ndarray:
    edges = np.roll(arr, -1, axis=0) - arr
    return np.stack([-edges[:, 1], edges[:, 0]], axis=1)


def polygons_intersect(p: ConvexPolygon, q: ConvexPolygon) -> bool:
    """Separating-axis test; shared boundary points count as intersecting."""
    for axes in (_axes(p.array), _axes(q.array)):
        proj_p = p.array @ axes.T
        proj_q = q.array @ axes.T
        separated = (proj_p.max(axis=0) < proj_q.min(axis=0)) | (
            proj_q.max(axis=0) < proj_p.min(axis=0)
        )
        if np.any(separated):
            return False
    return True


def polygons_intersect_by_crossing(p: ConvexPolygon, q: ConvexPolygon) -> bool:
    """Edge-crossing plus vertex-containment test, independent of polygons_intersect."""
    for e in p.edges:
        for f in q.edges:
            if segments_intersect(e, f):
                return True
    return point_in_polygon(p, q.vertices[0]) or point_in_polygon(q, p.vertices[0])


def polygon_circle_intersect(p: ConvexPolygon, c: Circle) -> bool:
    """Disk against convex polygon; tangency counts as intersecting."""
    if point_in_polygon(p, c.center):
        return True
    return min(point_segment_distance(c.center, e) for e in p.edges) <= c.radius


def circles_intersect(a: Circle, b: Circle) -> bool:
    return math.hypot(a.center.x - b.center.x, a.center.y - b.center.y) <= a.radius + b.radius


def polygon_distance(p: ConvexPolygon, q: ConvexPolygon) -> float:
    """Euclidean gap between two convex polygons (0 when they intersect)."""
    if polygons_intersect(p, q):
        return 0.0
    return min(segment_distance(e, f) for e in p.edges for f in q.edges)


def polygon_circle_distance(p: ConvexPolygon, c: Circle) -> float:
    if polygon_circle_intersect(p, c):
        return 0.0
    return min(point_segment_distance(c.center, e) for e in p.edges) - c.radius


def circle_distance(a: Circle, b: Circle) -> float:
    gap = math.hypot(a.center.x - b.center.x, a.center.y - b.center.y) - a.radius - b.radius
    return max(0.0, gap)


# ---------------------------------------------------------------------------
# Penetration depth (polygon-exact overlap measure)
# ---------------------------------------------------------------------------


def _unit_axes(arr: np.ndarray) -> np.ndarray:
    axes = _axes(arr)
    return axes / np.linalg.norm(axes, axis=1, keepdims=True)


def _polygon_polygon_depth(p: ConvexPolygon, q: ConvexPolygon) -> float:
    axes = np.concatenate([_unit_axes(p.array), _unit_axes(q.array)])
    proj_p = p.array @ axes.T
    proj_q = q.array @ axes.T
    overlap = np.minimum(
        proj_p.max(axis=0) - proj_q.min(axis=0), proj_q.max(axis=0) - proj_p.min(axis=0)
    )
    return max(0.0, float(overlap.min()))


def _polygon_circle_depth(p: ConvexPolygon, c: Circle) -> float:
    center = np.array([c.center.x, c.center.y])
    nearest = p.array[np.argmin(np.linalg.norm(p.array - center, axis=1))]
    extra = center - nearest
    norm = float(np.linalg.norm(extra))
    axes = _unit_axes(p.array)
    if norm > 0:
        axes = np.concatenate([axes, (extra / norm)[None, :]])
    proj_p = p.array @ axes.T
    proj_c = axes @ center
    overlap = np.minimum(
        proj_p.max(axis=0) - (proj_c - c.radius), (proj_c + c.radius) - proj_p.min(axis=0)
    )
    return max(0.0, float(overlap.min()))


def penetration_depth(a, b) -> float:
    """
    Minimum translation distance separating two shapes (0 when disjoint or touching).

    Accepts any combination of Circle and ConvexPolygon. For two circles this
    equals overlap_measure.
    """
    if isinstance(a, Circle) and isinstance(b, Circle):
        return overlap_measure(a, b)
    if isinstance(a, Circle):
        return _polygon_circle_depth(b, a)
    if isinstance(b, Circle):
        return _polygon_circle_depth(a, b)
    return _polygon_polygon_depth(a, b)


def shapes_intersect(a, b) -> bool:
    """Exact intersection test for any pair of circles and convex polygons."""
    if isinstance(a, Circle) and isinstance(b, Circle):
        return circles_intersect(a, b)
    if isinstance(a, Circle):
        return polygon_circle_intersect(b, a)
    if isinstance(b, Circle):
        return polygon_circle_intersect(a, b)
    return polygons_intersect(a, b)


def shape_distance(a, b) -> float:
    """Euclidean gap between two shapes (0 when they intersect)."""
    if isinstance(a, Circle) and isinstance(b, Circle):
        return circle_distance(a, b)
    if isinstance(a, Circle):
        return polygon_circle_distance(b, a)
    if isinstance(b, Circle):
        return polygon_circle_distance(a, b)
    return polygon_distance(a, b)
