"""Discrete-time world: obstacle motion, sensing, path feasibility and cost.

A :class:`WorldState` is an immutable snapshot; :func:`step_world`,
:func:`update_visibility` and :func:`advance_robot` return new snapshots.
Obstacles live in parallel numpy arrays (boxes as ``x0, y0, x1, y1`` rows)
so the collision kernels can consume them without conversion.

Every segment-versus-world query issued through this module increments
``MetricsCounters.collision_checks`` by one.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .common import ContractViolation, MetricsCounters
from .geometry import Point, Rect


class Kind(IntEnum):
    STATIC = 0
    MOVING = 1
    HIDDEN = 2


@dataclass(frozen=True)
class Obstacle:
    id: int
    shape: Rect
    velocity: tuple[float, float] = (0.0, 0.0)
    kind: Kind = Kind.STATIC
    visible: bool = True

    def __post_init__(self):
        if self.kind != Kind.MOVING and tuple(self.velocity) != (0.0, 0.0):
            raise ValueError(f"{self.kind.name.lower()} obstacle {self.id} cannot move")
        if self.kind == Kind.MOVING and not self.visible:
            raise ValueError(f"moving obstacle {self.id} must be visible")


@dataclass(frozen=True, eq=False)
class WorldState:
    bounds: Rect
    boxes: np.ndarray
    velocity: np.ndarray
    kind: np.ndarray
    visible: np.ndarray
    ids: np.ndarray
    robot_pos: Point
    robot_half: float
    robot_speed: float
    goal: Point
    sim_time: float = 0.0
    sensor_radius: float = -1.0  # negative -> 6 * robot_half
    inflate: bool = False

    def __post_init__(self):
        if self.sensor_radius < 0:
            object.__setattr__(self, "sensor_radius", 6.0 * self.robot_half)
        object.__setattr__(self, "robot_pos", Point(*map(float, self.robot_pos)))
        object.__setattr__(self, "goal", Point(*map(float, self.goal)))

    @classmethod
    def from_obstacles(cls, bounds: Rect, obstacles: Sequence[Obstacle], robot_pos, goal,
                       robot_half: float = 2.5, robot_speed: float = 20.0, **kw) -> "WorldState":
        m = len(obstacles)
        boxes = np.array([o.shape.corners() for o in obstacles], float).reshape(m, 4)
        vel = np.array([o.velocity for o in obstacles], float).reshape(m, 2)
        return cls(bounds, boxes, vel,
                   np.array([int(o.kind) for o in obstacles], np.int8),
                   np.array([o.visible for o in obstacles], bool),
                   np.array([o.id for o in obstacles], np.int64),
                   Point(*robot_pos), robot_half, robot_speed, Point(*goal), **kw)

    def replace(self, **changes) -> "WorldState":
        return dataclasses.replace(self, **changes)

    @property
    def obstacles(self) -> list[Obstacle]:
        out = []
        for b, v, k, vis, i in zip(self.boxes, self.velocity, self.kind, self.visible, self.ids):
            out.append(Obstacle(int(i), Rect(b[0], b[1], b[2] - b[0], b[3] - b[1]),
                                (float(v[0]), float(v[1])), Kind(int(k)), bool(vis)))
        return out

    @cached_property
    def visible_boxes(self) -> np.ndarray:
        """Boxes the planners may see, inflated by ``robot_half`` when enabled."""
        b = np.ascontiguousarray(self.boxes[self.visible])
        if self.inflate:
            b = b + np.array([-1.0, -1.0, 1.0, 1.0]) * self.robot_half
        return b

    @cached_property
    def visible_ids(self) -> np.ndarray:
        return self.ids[self.visible]

    @property
    def goal_reached(self) -> bool:
        return math.dist(self.robot_pos, self.goal) <= self.robot_half


@dataclass
class FeasReport:
    feasible: bool
    first_collision_vertex: Optional[int]
    blocking_obstacle: Optional[int]
    total_intersections: int
    unfeasible_segments: int
    eta: float
    segment_hits: np.ndarray


# -- collision queries (counted) ----------------------------------------------------

def first_hit(w: WorldState, a, b, m: MetricsCounters) -> tuple[float, int]:
    """Entry parameter of the first visible obstacle along a->b and its id,
    or ``(-1.0, -1)`` when the segment is free."""
    m.collision_checks += 1
    t, k = kernels.seg_first_hit(float(a[0]), float(a[1]), float(b[0]), float(b[1]),
                                 w.visible_boxes)
    if k < 0:
        return -1.0, -1
    return t, int(w.visible_ids[k])


def segment_free(w: WorldState, a, b, m: MetricsCounters) -> bool:
    return first_hit(w, a, b, m)[1] < 0


def segments_hit(boxes: np.ndarray, edges: np.ndarray, m: MetricsCounters) -> np.ndarray:
    """Which of the ``(n, 4)`` edges touch any of ``boxes``; one query per edge."""
    m.collision_checks += len(edges)
    return kernels.edges_hit(np.ascontiguousarray(edges, dtype=float), boxes)


def check_path(w: WorldState, path, m: MetricsCounters) -> FeasReport:
    P = np.ascontiguousarray(path, dtype=float)
    m.collision_checks += len(P) - 1
    counts, first = kernels.path_hits(P, w.visible_boxes)
    bad = np.flatnonzero(counts)
    mu = int(counts.sum())
    if bad.size == 0:
        return FeasReport(True, None, None, 0, 0, 0.0, counts)
    i = int(bad[0])
    return FeasReport(False, i, int(w.visible_ids[first[i]]), mu, int(bad.size),
                      mu / bad.size, counts)


def eval_path(path) -> float:
    P = np.asarray(path, dtype=float)
    if len(P) < 2:
        return 0.0
    return float(np.sqrt(((P[1:] - P[:-1]) ** 2).sum(axis=1)).sum())


def changed_boxes(prev: Optional[WorldState], cur: WorldState) -> np.ndarray:
    """Visible boxes of ``cur`` that moved or appeared since ``prev``."""
    if prev is None or prev.boxes.shape != cur.boxes.shape:
        return cur.visible_boxes
    moved = (prev.boxes != cur.boxes).any(axis=1) | (~prev.visible)
    sel = (moved & cur.visible)[cur.visible]
    return np.ascontiguousarray(cur.visible_boxes[sel])


# -- dynamics -----------------------------------------------------------------------

def _blocked(B: np.ndarray, bounds: Rect, statics: np.ndarray) -> np.ndarray:
    out = ((B[:, 0] < bounds.min_x) | (B[:, 1] < bounds.min_y)
           | (B[:, 2] > bounds.max_x) | (B[:, 3] > bounds.max_y))
    if statics.shape[0]:
        ov = ((B[:, None, 0] < statics[:, 2]) & (B[:, None, 2] > statics[:, 0])
              & (B[:, None, 1] < statics[:, 3]) & (B[:, None, 3] > statics[:, 1]))
        out |= ov.any(axis=1)
    return out


def step_world(w: WorldState, dt: float) -> WorldState:
    """Translate moving obstacles by ``velocity * dt``.

    Per axis: a move that leaves the bounds or overlaps a visible static
    obstacle flips that velocity component and is retried once; if the retry
    is blocked too the obstacle holds that coordinate for this step.
    """
    if not dt > 0:
        raise ContractViolation(f"dt must be positive, got {dt}")
    mov = np.flatnonzero(w.kind == Kind.MOVING)
    if mov.size == 0:
        return w.replace(sim_time=w.sim_time + dt)
    statics = w.boxes[(w.kind == Kind.STATIC) & w.visible]
    B = w.boxes[mov].copy()
    V = w.velocity[mov].copy()
    for ax in (0, 1):
        cand = B.copy()
        cand[:, ax] += V[:, ax] * dt
        cand[:, ax + 2] += V[:, ax] * dt
        bad = _blocked(cand, w.bounds, statics)
        if bad.any():
            V[bad, ax] = -V[bad, ax]
            retry = B[bad].copy()
            retry[:, ax] += V[bad, ax] * dt
            retry[:, ax + 2] += V[bad, ax] * dt
            still = _blocked(retry, w.bounds, statics)
            retry[still] = B[bad][still]
            cand[bad] = retry
        B = cand
    boxes = w.boxes.copy()
    vel = w.velocity.copy()
    boxes[mov] = B
    vel[mov] = V
    return w.replace(boxes=boxes, velocity=vel, sim_time=w.sim_time + dt)


def update_visibility(w: WorldState) -> WorldState:
    hid = (w.kind == Kind.HIDDEN) & ~w.visible
    if not hid.any():
        return w
    px, py = w.robot_pos
    B = w.boxes
    dx = np.maximum(np.maximum(B[:, 0] - px, 0.0), px - B[:, 2])
    dy = np.maximum(np.maximum(B[:, 1] - py, 0.0), py - B[:, 3])
    seen = hid & (np.hypot(dx, dy) <= w.sensor_radius)
    if not seen.any():
        return w
    return w.replace(visible=w.visible | seen)


def advance_robot(w: WorldState, path, dt: float) -> tuple[WorldState, np.ndarray]:
    """Move the robot along ``path`` at its speed for ``dt`` seconds.

    Returns the new world and the unconsumed path, whose first point is the
    new robot position. The robot stops at the last waypoint.
    """
    P = np.asarray(path, dtype=float)
    if P[0, 0] != w.robot_pos.x or P[0, 1] != w.robot_pos.y:
        raise ContractViolation(f"path starts at {tuple(P[0])}, robot is at {w.robot_pos}")
    left = w.robot_speed * dt
    cur = P[0]
    i = 1
    while i < len(P) and left > 0.0:
        seg = P[i] - cur
        L = math.hypot(seg[0], seg[1])
        if L <= left:
            cur = P[i]
            left -= L
            i += 1
        else:
            cur = cur + seg * (left / L)
            left = 0.0
    rest = np.vstack([cur[None, :], P[i:]]) if i < len(P) else np.vstack([cur, cur])
    return w.replace(robot_pos=Point(float(cur[0]), float(cur[1]))), rest
