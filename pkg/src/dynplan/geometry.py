"""Axis-aligned rectangle and segment primitives.

Rectangles are closed: touching the boundary counts as contact. All tests are
plain double-precision arithmetic with no epsilon slop.

The scalar helpers operating on raw floats (``seg_rect_entry`` and friends)
are written so numba can compile them; :mod:`dynplan.kernels` builds the
batched versions on top of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True, slots=True)
class Segment:
    a: Point
    b: Point

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (*self.a, *self.b)):
            raise ValueError(f"non-finite segment endpoint: {self}")


@dataclass(frozen=True, slots=True)
class Rect:
    min_x: float
    min_y: float
    width: float
    height: float

    def __post_init__(self):
        vals = (self.min_x, self.min_y, self.width, self.height)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite rectangle: {self}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"rectangle needs positive extent: {self}")

    @property
    def max_x(self) -> float:
        return self.min_x + self.width

    @property
    def max_y(self) -> float:
        return self.min_y + self.height

    def corners(self) -> tuple[float, float, float, float]:
        """``(x0, y0, x1, y1)`` min/max form used by the array kernels."""
        return (self.min_x, self.min_y, self.max_x, self.max_y)

    def inflated(self, margin: float) -> "Rect":
        return Rect(self.min_x - margin, self.min_y - margin,
                    self.width + 2 * margin, self.height + 2 * margin)


# -- scalar kernels on raw floats ---------------------------------------------

def seg_rect_entry(ax, ay, bx, by, x0, y0, x1, y1):
    """Parameter ``t`` in [0, 1] where segment a->b first touches the closed
    box, or -1.0 when they are disjoint (Liang-Barsky clipping)."""
    # exact bounding-box rejection first, so rounding in the clip divisions
    # cannot report contact with a box the segment's extent never reaches
    if max(ax, bx) < x0 or min(ax, bx) > x1 or max(ay, by) < y0 or min(ay, by) > y1:
        return -1.0
    # clip in a canonical endpoint order so a->b and b->a agree exactly
    swap = bx < ax or (bx == ax and by < ay)
    if swap:
        ax, bx = bx, ax
        ay, by = by, ay
    t0 = 0.0
    t1 = 1.0
    dx = bx - ax
    if dx == 0.0:
        if ax < x0 or ax > x1:
            return -1.0
    else:
        ta = (x0 - ax) / dx
        tb = (x1 - ax) / dx
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return -1.0
    dy = by - ay
    if dy == 0.0:
        if ay < y0 or ay > y1:
            return -1.0
    else:
        ta = (y0 - ay) / dy
        tb = (y1 - ay) / dy
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return -1.0
    if swap:
        return 1.0 - t1
    return t0


def point_rect_dist(px, py, x0, y0, x1, y1):
    dx = max(x0 - px, 0.0, px - x1)
    dy = max(y0 - py, 0.0, py - y1)
    return math.hypot(dx, dy)


def point_seg_dist(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    ll = dx * dx + dy * dy
    if ll == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / ll
    # clamped projections measure to the endpoint itself (no round trip via t)
    if t <= 0.0:
        return math.hypot(px - ax, py - ay)
    if t >= 1.0:
        return math.hypot(px - bx, py - by)
    cx = ax + t * dx - px
    cy = ay + t * dy - py
    return math.hypot(cx, cy)


def seg_rect_dist(ax, ay, bx, by, x0, y0, x1, y1):
    # Disjoint convex sets: the minimum is attained at a vertex of one of them.
    if seg_rect_entry(ax, ay, bx, by, x0, y0, x1, y1) >= 0.0:
        return 0.0
    d = min(point_rect_dist(ax, ay, x0, y0, x1, y1),
            point_rect_dist(bx, by, x0, y0, x1, y1))
    d = min(d, point_seg_dist(x0, y0, ax, ay, bx, by))
    d = min(d, point_seg_dist(x1, y0, ax, ay, bx, by))
    d = min(d, point_seg_dist(x0, y1, ax, ay, bx, by))
    d = min(d, point_seg_dist(x1, y1, ax, ay, bx, by))
    return d


# -- typed API ------------------------------------------------------------------

def segment_intersects_rect(s: Segment, r: Rect) -> bool:
    return seg_rect_entry(s.a.x, s.a.y, s.b.x, s.b.y, *r.corners()) >= 0.0


def segment_rect_distance(s: Segment, r: Rect) -> float:
    return seg_rect_dist(s.a.x, s.a.y, s.b.x, s.b.y, *r.corners())


def point_in_rect(p: Point, r: Rect) -> bool:
    return r.min_x <= p.x <= r.max_x and r.min_y <= p.y <= r.max_y
