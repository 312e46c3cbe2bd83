"""Shared builders and independent oracles for the test suite."""
import math

import numpy as np

from dynplan.geometry import Rect
from dynplan.rrt import Tree
from dynplan.world import Kind, Obstacle, WorldState


def make_world(rects=(), bounds=(0, 0, 100, 100), robot=(1, 1), goal=(99, 99), half=1.0,
               speed=10.0, moving=(), hidden=(), **kw):
    """World from ``(x, y, w, h)`` tuples; ``moving`` entries are ``(x, y, w, h, vx, vy)``."""
    obs = [Obstacle(i, Rect(*r)) for i, r in enumerate(rects)]
    for r in moving:
        obs.append(Obstacle(len(obs), Rect(*r[:4]), (r[4], r[5]), Kind.MOVING))
    for r in hidden:
        obs.append(Obstacle(len(obs), Rect(*r), kind=Kind.HIDDEN, visible=False))
    return WorldState.from_obstacles(Rect(*bounds), obs, robot, goal, half, speed, **kw)


def random_boxes(rng, m, lo=0.0, hi=100.0, smin=1.0, smax=20.0):
    out = np.empty((m, 4))
    for k in range(m):
        w, h = rng.uniform(smin, smax), rng.uniform(smin, smax)
        x, y = rng.uniform(lo, hi - w), rng.uniform(lo, hi - h)
        out[k] = (x, y, x + w, y + h)
    return out


def world_from_boxes(boxes, **kw):
    return make_world([(b[0], b[1], b[2] - b[0], b[3] - b[1]) for b in boxes], **kw)


# -- oracles ------------------------------------------------------------------------

def sat_intersects(a, b, box):
    """Separating-axis test for a segment against a closed box."""
    x0, y0, x1, y1 = box
    if max(a[0], b[0]) < x0 or min(a[0], b[0]) > x1:
        return False
    if max(a[1], b[1]) < y0 or min(a[1], b[1]) > y1:
        return False
    nx, ny = a[1] - b[1], b[0] - a[0]
    c = nx * a[0] + ny * a[1]
    proj = [nx * x + ny * y for x in (x0, x1) for y in (y0, y1)]
    return min(proj) <= c <= max(proj)


def point_box_dist(p, box):
    dx = max(box[0] - p[0], 0.0, p[0] - box[2])
    dy = max(box[1] - p[1], 0.0, p[1] - box[3])
    return math.hypot(dx, dy)


def ternary_seg_box_dist(a, b, box, iters=200):
    """Distance to a convex set is convex along the segment: minimize by ternary search."""
    lo, hi = 0.0, 1.0

    def f(t):
        return point_box_dist((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])), box)

    for _ in range(iters):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    return min(f(0.0), f(1.0), f((lo + hi) / 2))


def brute_mu(path, boxes):
    """Per-segment count of intersected boxes by iterating every pair."""
    return [sum(sat_intersects(path[i], path[i + 1], bx) for bx in boxes)
            for i in range(len(path) - 1)]


def edges_of(pts, parent):
    return [(pts[i], pts[parent[i]]) for i in range(1, len(parent))]


def random_tree(rng, n):
    t = Tree((rng.uniform(0, 100), rng.uniform(0, 100)))
    for _ in range(n - 1):
        t.add((rng.uniform(0, 100), rng.uniform(0, 100)), rng.randrange(t.n))
    return t


def survivors_oracle(t, boxes):
    """Nodes none of whose edges on the way to the root touch a box."""
    keep = []
    for i in range(t.n):
        ok = True
        j = i
        while j > 0:
            p = int(t.parent[j])
            if any(sat_intersects(t.pts[j], t.pts[p], b) for b in boxes):
                ok = False
                break
            j = p
        keep.append(ok)
    return keep
