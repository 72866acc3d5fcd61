"""2D geometric primitives shared by the scene, motion, and protocol layers.

Conventions: points are (x, y) tuples or numpy arrays in meters, polygons are
CCW vertex lists, angles are radians in (-pi, pi].
"""

from __future__ import annotations

import math

import numpy as np

Vec2 = tuple[float, float]


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def polygon_area(vertices: np.ndarray) -> float:
    """Signed area via the shoelace formula (positive for CCW)."""
    x = vertices[:, 0]
    y = vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def is_convex_ccw(vertices: np.ndarray, tol: float = 1e-12) -> bool:
    """True if the polygon is simple, convex, and wound counter-clockwise.

    Collinear consecutive edges are tolerated; reflex corners are not.
    """
    n = len(vertices)
    if n < 3:
        return False
    edges = np.roll(vertices, -1, axis=0) - vertices
    cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
    return bool(np.all(cross >= -tol)) and polygon_area(vertices) > tol


def point_in_convex_polygon(p, vertices: np.ndarray) -> bool:
    """Containment test for a convex CCW polygon; edge points count as inside."""
    px, py = float(p[0]), float(p[1])
    nxt = np.roll(vertices, -1, axis=0)
    cross = (nxt[:, 0] - vertices[:, 0]) * (py - vertices[:, 1]) - (nxt[:, 1] - vertices[:, 1]) * (px - vertices[:, 0])
    return bool(np.all(cross >= 0.0))


def points_in_convex_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Vectorized containment for an (N, 2) point array; returns a bool mask."""
    nxt = np.roll(vertices, -1, axis=0)
    ex = (nxt[:, 0] - vertices[:, 0])[None, :]
    ey = (nxt[:, 1] - vertices[:, 1])[None, :]
    rx = points[:, 0][:, None] - vertices[:, 0][None, :]
    ry = points[:, 1][:, None] - vertices[:, 1][None, :]
    cross = ex * ry - ey * rx
    return np.all(cross >= 0.0, axis=1)


def point_segment_distance(p, a, b) -> float:
    """Distance from point p to segment ab."""
    d, _ = point_segment_closest(p, a, b)
    return d


def point_segment_closest(p, a, b) -> tuple[float, np.ndarray]:
    """Distance from p to segment ab and the closest point on the segment."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom <= 0.0:
        return float(np.hypot(*(p - a))), a
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    closest = a + t * ab
    return float(np.hypot(*(p - closest))), closest


def segment_distance(p, segment) -> float:
    """Distance from point p to a segment given as [ax, ay, bx, by]."""
    return point_segment_distance(p, (segment[0], segment[1]), (segment[2], segment[3]))


def batch_segments_closest(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Closest point on every segment for every point.

    points: (N, 2), segments: (S, 4) as [ax, ay, bx, by]; returns (N, S, 2).
    """
    a = segments[:, 0:2]                       # (S, 2)
    ab = segments[:, 2:4] - a                  # (S, 2)
    denom = np.einsum("sd,sd->s", ab, ab)      # (S,)
    ap = points[:, None, :] - a[None, :, :]    # (N, S, 2)
    t = np.einsum("nsd,sd->ns", ap, ab) / np.where(denom > 0.0, denom, 1.0)
    t = np.clip(t, 0.0, 1.0)
    return a[None, :, :] + t[:, :, None] * ab[None, :, :]


def ray_segment_distance(origin, direction, a, b) -> float | None:
    """Distance along a ray (unit direction) to segment ab, or None if missed."""
    ox, oy = float(origin[0]), float(origin[1])
    dx, dy = float(direction[0]), float(direction[1])
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    sx, sy = bx - ax, by - ay
    denom = dx * sy - dy * sx
    if abs(denom) < 1e-15:
        return None
    t = ((ax - ox) * sy - (ay - oy) * sx) / denom
    u = ((ax - ox) * dy - (ay - oy) * dx) / denom
    if t >= 0.0 and 0.0 <= u <= 1.0:
        return t
    return None


def raycast(origin, headings: np.ndarray, segments: np.ndarray, max_dist: float) -> np.ndarray:
    """Cast rays against many segments at once.

    origin: (2,), headings: (R,) radians, segments: (S, 4) as [ax, ay, bx, by].
    Returns (R,) distances clamped to max_dist.
    """
    if len(segments) == 0:
        return np.full(len(headings), max_dist)
    dx = np.cos(headings)[:, None]  # (R, 1)
    dy = np.sin(headings)[:, None]
    ax = segments[:, 0][None, :]  # (1, S)
    ay = segments[:, 1][None, :]
    sx = (segments[:, 2] - segments[:, 0])[None, :]
    sy = (segments[:, 3] - segments[:, 1])[None, :]
    ox, oy = float(origin[0]), float(origin[1])
    denom = dx * sy - dy * sx
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((ax - ox) * sy - (ay - oy) * sx) / denom
        u = ((ax - ox) * dy - (ay - oy) * dx) / denom
    hit = (np.abs(denom) > 1e-15) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    t = np.where(hit, t, np.inf)
    return np.minimum(t.min(axis=1), max_dist)


def convex_polygons_overlap(poly_a: np.ndarray, poly_b: np.ndarray) -> bool:
    """Separating-axis overlap test for two convex polygons (touching counts)."""
    for poly in (poly_a, poly_b):
        edges = np.roll(poly, -1, axis=0) - poly
        # outward normals of a CCW polygon
        axes = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
        for axis in axes:
            pa = poly_a @ axis
            pb = poly_b @ axis
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True


def rect_to_polygon(min_xy, max_xy) -> np.ndarray:
    """Axis-aligned rectangle as a CCW polygon."""
    x0, y0 = float(min_xy[0]), float(min_xy[1])
    x1, y1 = float(max_xy[0]), float(max_xy[1])
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


def oriented_rect(center, heading: float, length: float, width: float) -> np.ndarray:
    """CCW polygon of a rectangle centered at `center`, long axis along heading."""
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = length / 2.0, width / 2.0
    corners = np.array([[-hl, -hw], [hl, -hw], [hl, hw], [-hl, hw]], dtype=float)
    rot = np.array([[c, -s], [s, c]])
    return corners @ rot.T + np.asarray(center, dtype=float)


def circle_polygon_overlap(center, radius: float, poly: np.ndarray) -> bool:
    """True if a circle intersects a convex polygon (containment included)."""
    if point_in_convex_polygon(center, poly):
        return True
    nxt = np.roll(poly, -1, axis=0)
    for a, b in zip(poly, nxt):
        if point_segment_distance(center, a, b) <= radius:
            return True
    return False
