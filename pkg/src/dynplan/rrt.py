"""Bidirectional RRT growth.

Extension tries the whole segment from the nearest node to the target. When
that segment is blocked, the midpoint between the nearest node and the first
collision point is added instead (if that stub is longer than ``min_step``).
Each growth step feeds the same sample to both trees and merges them when
both get there.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .common import ContractViolation, MetricsCounters
from .geometry import Point
from .nn import LogForest
from .world import WorldState, first_hit

GOAL_BIAS = 0.1


class Status(Enum):
    REACHED = "reached"
    ADVANCED = "advanced"
    TRAPPED = "trapped"


class GrowthResult(NamedTuple):
    status: Status
    node: Optional[int] = None


@dataclass(frozen=True)
class TreeNode:
    config: Point
    parent: Optional[int]
    valid: bool = True


class Tree:
    """RRT vertex store: packed coordinates, parent links, and a NN index.

    Parents always precede children (``parent[i] < i``); node 0 is the root.
    """

    __slots__ = ("pts", "parent", "n", "index")

    def __init__(self, root, capacity: int = 32):
        self.pts = np.empty((capacity, 2))
        self.parent = np.empty(capacity, np.int64)
        self.pts[0] = root
        self.parent[0] = -1
        self.n = 1
        self.index = LogForest()
        self.index.insert(self.pts[0], 0)

    def __len__(self) -> int:
        return self.n

    @property
    def root_config(self) -> np.ndarray:
        return self.pts[0]

    @property
    def nodes(self) -> list[TreeNode]:
        return [TreeNode(Point(*self.pts[i]), None if i == 0 else int(self.parent[i]))
                for i in range(self.n)]

    def add(self, p, parent: int) -> int:
        if self.n == self.pts.shape[0]:
            cap = 2 * self.n
            pts = np.empty((cap, 2))
            pts[: self.n] = self.pts[: self.n]
            par = np.empty(cap, np.int64)
            par[: self.n] = self.parent[: self.n]
            self.pts, self.parent = pts, par
        i = self.n
        self.pts[i] = p
        self.parent[i] = parent
        self.n += 1
        self.index.insert(self.pts[i], i)
        return i

    def nearest(self, q, m: MetricsCounters) -> int:
        return self.index.nearest(q, m)[0]

    def edges(self) -> np.ndarray:
        """``(n - 1, 4)`` rows ``(child, parent)`` for nodes 1..n-1."""
        P = self.pts[: self.n]
        return np.hstack([P[1:], P[self.parent[1: self.n]]])

    def branch(self, i: int) -> list[int]:
        """Node indices from ``i`` up to the root."""
        out = [i]
        par = self.parent
        while i > 0:
            i = int(par[i])
            out.append(i)
        return out

    def depth(self, i: int) -> int:
        return len(self.branch(i)) - 1

    def path_from_root(self, i: int) -> np.ndarray:
        return self.pts[self.branch(i)[::-1]].copy()

    @classmethod
    def from_arrays(cls, pts: np.ndarray, parent: np.ndarray) -> "Tree":
        t = cls.__new__(cls)
        n = len(pts)
        cap = max(32, 1 << (n - 1).bit_length())
        t.pts = np.empty((cap, 2))
        t.pts[:n] = pts
        t.parent = np.empty(cap, np.int64)
        t.parent[:n] = parent
        t.n = n
        t.index = LogForest.from_arrays(t.pts[:n].copy(), np.arange(n, dtype=np.int64))
        return t

    def subset(self, keep: np.ndarray) -> "Tree":
        """Tree over the nodes flagged in ``keep``; the first kept node whose
        parent is dropped becomes the root. Order is preserved."""
        keep = np.asarray(keep, bool)
        idx = np.flatnonzero(keep)
        newid = np.cumsum(keep) - 1
        par = self.parent[idx].copy()
        inside = par >= 0
        inside[inside] = keep[par[inside]]
        par = np.where(inside, newid[np.where(par >= 0, par, 0)], -1)
        if np.count_nonzero(par < 0) != 1 or par[0] >= 0:
            raise ContractViolation("kept node set is not a single rooted subtree")
        return Tree.from_arrays(self.pts[idx], par)

    def rerooted(self, p, via: int) -> "Tree":
        """New tree rooted at ``p`` with an edge to node ``via``; the branch
        from ``via`` to the old root is reversed."""
        n = self.n
        par = np.empty(n + 1, np.int64)
        par[0] = -1
        par[1:] = self.parent[:n] + 1
        chain = self.branch(via)
        par[via + 1] = 0
        for c, pc in zip(chain, chain[1:]):
            par[pc + 1] = c + 1
        pts = np.vstack([np.asarray(p, float)[None, :], self.pts[:n]])
        order = np.argsort(tree_depths(par), kind="stable")
        rank = np.empty(n + 1, np.int64)
        rank[order] = np.arange(n + 1)
        newpar = np.where(par[order] >= 0, rank[np.maximum(par[order], 0)], -1)
        return Tree.from_arrays(pts[order], newpar)

    def splice(self, other: "Tree", at: int) -> None:
        """Graft ``other`` in place: its root is identified with node ``at``."""
        base = self.n - 1
        for j in range(1, other.n):
            pj = int(other.parent[j])
            self.add(other.pts[j], at if pj == 0 else base + pj)


def tree_depths(parent: np.ndarray) -> np.ndarray:
    """Depth of every node given parent links (root: -1), by pointer jumping."""
    n = len(parent)
    jump = np.where(parent >= 0, parent, np.arange(n))
    d = (parent >= 0).astype(np.int64)
    while True:
        nxt = jump[jump]
        if np.array_equal(nxt, jump):
            return d
        d = d + d[jump]
        jump = nxt


def ancestor_or(flag: np.ndarray, parent: np.ndarray) -> np.ndarray:
    """``out[i]`` is True if ``flag`` is set on ``i`` or any of its ancestors."""
    n = len(parent)
    out = flag.copy()
    jump = np.where(parent >= 0, parent, np.arange(n))
    while True:
        out |= out[jump]
        nxt = jump[jump]
        if np.array_equal(nxt, jump):
            return out
        jump = nxt


def random_config(w: WorldState, rng: random.Random) -> tuple[float, float]:
    b = w.bounds
    return (b.min_x + rng.random() * b.width, b.min_y + rng.random() * b.height)


def extend(t: Tree, q, w: WorldState, m: MetricsCounters,
           min_step: Optional[float] = None) -> GrowthResult:
    if min_step is None:
        min_step = w.robot_half
    near = t.nearest(q, m)
    a = t.pts[near]
    qx, qy = float(q[0]), float(q[1])
    if a[0] == qx and a[1] == qy:
        return GrowthResult(Status.REACHED, near)
    th, _ = first_hit(w, a, (qx, qy), m)
    if th < 0.0:
        return GrowthResult(Status.REACHED, t.add((qx, qy), near))
    half = 0.5 * th
    dx, dy = qx - a[0], qy - a[1]
    if th > 0.0 and half * math.hypot(dx, dy) > min_step:
        return GrowthResult(Status.ADVANCED, t.add((a[0] + half * dx, a[1] + half * dy), near))
    return GrowthResult(Status.TRAPPED)


def connect(t: Tree, q, w: WorldState, m: MetricsCounters) -> GrowthResult:
    while True:
        r = extend(t, q, w, m)
        if r.status is not Status.ADVANCED:
            return r


def extract_path(ta: Tree, tb: Tree, bridge_a: int, bridge_b: int) -> np.ndarray:
    if not np.array_equal(ta.pts[bridge_a], tb.pts[bridge_b]):
        raise ContractViolation("bridge nodes do not share a configuration")
    head = ta.path_from_root(bridge_a)
    tail = tb.path_from_root(bridge_b)[::-1]
    return np.vstack([head, tail[1:]])


def grow_step(ta: Tree, tb: Tree, w: WorldState, rng: random.Random, m: MetricsCounters,
              target=None, goal_bias: float = GOAL_BIAS) -> Optional[np.ndarray]:
    """One bidirectional iteration; returns the merged path when the trees meet.

    The sample (``target`` or a goal-biased uniform draw, the goal being
    ``tb``'s root) is extended from ``ta``; ``tb`` then connects greedily to
    whatever ``ta`` added. If ``ta`` is trapped the roles are mirrored.
    """
    if target is None:
        target = tuple(tb.root_config) if rng.random() < goal_bias else random_config(w, rng)
    ra = extend(ta, target, w, m)
    if ra.status is not Status.TRAPPED:
        rb = connect(tb, ta.pts[ra.node], w, m)
        if rb.status is Status.REACHED:
            return extract_path(ta, tb, ra.node, rb.node)
        return None
    rb = extend(tb, target, w, m)
    if rb.status is not Status.TRAPPED:
        ra = connect(ta, tb.pts[rb.node], w, m)
        if ra.status is Status.REACHED:
            return extract_path(ta, tb, ra.node, rb.node)
    return None
