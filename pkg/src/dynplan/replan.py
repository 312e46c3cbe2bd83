"""On-line RRT replanners: waypoint-cache targeting, DRRT and MP-RRT.

Both planners keep a robot-side tree and a goal-side tree. When obstacles
change, edges touching them are invalidated. DRRT drops whole invalid
branches; MP-RRT keeps the valid pieces that got cut off in a bounded forest
and tries to reconnect them later. Only the robot tree is ever re-rooted.

With ``adv`` set the robot keeps moving towards the robot-tree node nearest
the goal while the trees are disconnected; otherwise it waits.
"""
from __future__ import annotations

import random
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .base import Budget, Move, Planner, PlannerAction, Wait
from .common import MetricsCounters
from .rrt import Status, Tree, ancestor_or, connect, extract_path, grow_step, random_config
from .world import WorldState, changed_boxes, segment_free, segments_hit

P_GOAL = 0.1
P_WAYPOINT = 0.6
P_VICINITY = 0.4
P_FOREST = 0.1
CACHE_SIZE = 100
FOREST_MAX = 25
MIN_SAVE = 5


class WaypointCache:
    def __init__(self, capacity: int = CACHE_SIZE):
        self.slots = np.empty((capacity, 2))
        self.count = 0

    @property
    def capacity(self) -> int:
        return self.slots.shape[0]

    def store(self, path, rng: random.Random) -> None:
        """Insert every vertex; once full each insert overwrites a random slot."""
        for v in np.asarray(path, float):
            if self.count < self.capacity:
                self.slots[self.count] = v
                self.count += 1
            else:
                self.slots[rng.randrange(self.capacity)] = v

    def sample(self, rng: random.Random) -> np.ndarray:
        return self.slots[rng.randrange(self.count)]


def choose_target(cache: WaypointCache, goal, w: WorldState, rng: random.Random,
                  p: Optional[float] = None):
    if p is None:
        p = rng.random()
    if p < P_GOAL:
        return tuple(goal)
    if p < P_GOAL + P_WAYPOINT and cache.count:
        return tuple(cache.sample(rng))
    return random_config(w, rng)


def invalid_edges(t: Tree, boxes: np.ndarray, m: MetricsCounters) -> np.ndarray:
    """Per-node flag: the edge into the node touches one of ``boxes``."""
    flag = np.zeros(t.n, bool)
    if boxes.shape[0] and t.n > 1:
        flag[1:] = segments_hit(boxes, t.edges(), m)
    return flag


def invalidate_and_trim(t: Tree, boxes: np.ndarray, m: MetricsCounters) -> Tree:
    """Drop every node whose own edge or any ancestor edge touches ``boxes``."""
    bad = invalid_edges(t, boxes, m)
    if not bad.any():
        return t
    dead = ancestor_or(bad, t.parent[: t.n])
    return t.subset(~dead)


def split_tree(t: Tree, killed: np.ndarray) -> tuple[Optional[Tree], list[Tree]]:
    """Remove ``killed`` nodes; return the part still attached to the root
    (None if the root died) and the detached valid sub-trees."""
    n = t.n
    par = t.parent[:n]
    alive = ~killed
    head = alive & ((par < 0) | killed[np.maximum(par, 0)])
    jump = np.where(head | killed, np.arange(n), par)
    while True:
        nxt = jump[jump]
        if np.array_equal(nxt, jump):
            break
        jump = nxt
    main = t.subset(alive & (jump == 0)) if alive[0] else None
    pieces = [t.subset(alive & (jump == h)) for h in np.flatnonzero(head) if h != 0]
    return main, pieces


class SampleChoice(NamedTuple):
    point: tuple
    forest_index: Optional[int] = None  # set when the sample is a sub-tree root


def mprrt_select_sample(forest: list[Tree], goal, w: WorldState, rng: random.Random,
                        p: Optional[float] = None) -> SampleChoice:
    if p is None:
        p = rng.random()
    if p < P_GOAL:
        return SampleChoice(tuple(goal))
    if p < P_GOAL + P_FOREST and forest:
        k = rng.randrange(len(forest))
        return SampleChoice(tuple(forest[k].root_config), k)
    return SampleChoice(random_config(w, rng))


class _TwoTreePlanner(Planner):
    """Shared machinery: change tracking, robot-tree re-rooting, movement policy."""

    def __init__(self, w: WorldState, rng, adv: bool = True, clock=None):
        super().__init__(w, rng, clock)
        self.adv = adv
        self.ta = Tree(w.robot_pos)
        self.tb = Tree(w.goal)
        self._seen: Optional[WorldState] = None

    def tree_sizes(self):
        return (self.ta.n, self.tb.n)

    def _changes(self, w: WorldState) -> np.ndarray:
        boxes = changed_boxes(self._seen, w)
        self._seen = w
        return boxes

    def _path_touches(self, boxes: np.ndarray, m: MetricsCounters) -> bool:
        P = self.path
        return bool(segments_hit(boxes, np.hstack([P[:-1], P[1:]]), m).any())

    def _reroot(self, w: WorldState, m: MetricsCounters) -> None:
        robot = np.asarray(w.robot_pos, float)
        if np.array_equal(self.ta.root_config, robot):
            return
        near = self.ta.nearest(robot, m)
        if segment_free(w, robot, self.ta.pts[near], m):
            self.ta = self.ta.rerooted(robot, near)
        else:
            self._retire(self.ta)
            self.ta = Tree(w.robot_pos)

    def _retire(self, t: Tree) -> None:
        pass

    def _found(self, path: np.ndarray) -> None:
        self.path = path

    def _fallback(self, w: WorldState, m: MetricsCounters) -> PlannerAction:
        if not self.adv:
            return Wait(replanning=True)
        i = self.ta.nearest(w.goal, m)
        if i == 0:
            return Wait(replanning=True)
        return Move(self.ta.path_from_root(i))


class DrrtPlanner(_TwoTreePlanner):
    name = "drrt"

    def __init__(self, w: WorldState, rng, adv: bool = True, clock=None):
        super().__init__(w, rng, adv, clock)
        self.cache = WaypointCache()

    def _sample(self, w: WorldState):
        rng = self.rng
        if self.cache.count and rng.random() < P_VICINITY:
            c = self.cache.sample(rng)
            v = 4.0 * w.robot_half
            b = w.bounds
            x = min(max(c[0] + (2 * rng.random() - 1) * v, b.min_x), b.max_x)
            y = min(max(c[1] + (2 * rng.random() - 1) * v, b.min_y), b.max_y)
            return (x, y)
        return choose_target(self.cache, w.goal, w, rng)

    def cycle(self, w: WorldState, budget: Budget, m: MetricsCounters) -> PlannerAction:
        return drrt_cycle(self, w, budget, self.rng, m)

    def _found(self, path):
        self.path = path
        self.cache.store(path, self.rng)


def drrt_cycle(s: DrrtPlanner, w: WorldState, budget: Budget, rng, m: MetricsCounters) -> PlannerAction:
    changed = s._changes(w)
    if changed.shape[0]:
        s.ta = invalidate_and_trim(s.ta, changed, m)
        s.tb = invalidate_and_trim(s.tb, changed, m)
        if s.path is not None and s._path_touches(changed, m):
            s.path = None
    if s.path is None:
        s._reroot(w, m)
        while budget.take():
            path = grow_step(s.ta, s.tb, w, rng, m, target=s._sample(w))
            if path is not None:
                s._found(path)
                break
    if s.path is not None:
        return Move(s.path)
    return s._fallback(w, m)


class MprrtPlanner(_TwoTreePlanner):
    name = "mprrt"

    def __init__(self, w: WorldState, rng, adv: bool = True, clock=None,
                 forest_max: int = FOREST_MAX, min_save: int = MIN_SAVE):
        super().__init__(w, rng, adv, clock)
        self.forest: list[Tree] = []
        self.forest_max = forest_max
        self.min_save = min_save

    def _retire(self, t: Tree) -> None:
        self._admit(t)

    def _admit(self, t: Tree) -> None:
        if t.n >= self.min_save:
            self.forest.append(t)
            if len(self.forest) > self.forest_max:
                self.forest.pop(0)

    def cycle(self, w: WorldState, budget: Budget, m: MetricsCounters) -> PlannerAction:
        return mprrt_cycle(self, w, budget, self.rng, m)


def prune_and_prepend(s: MprrtPlanner, w: WorldState, m: MetricsCounters,
                      changed: Optional[np.ndarray] = None) -> MprrtPlanner:
    """Kill nodes on invalid edges, bank detached valid pieces in the forest
    (oldest evicted first) and re-root the robot tree when a path is needed."""
    if changed is None:
        changed = s._changes(w)
    if changed.shape[0]:
        pieces: list[Tree] = []
        for attr in ("ta", "tb"):
            t = getattr(s, attr)
            killed = invalid_edges(t, changed, m)
            if killed.any():
                main, detached = split_tree(t, killed)
                setattr(s, attr, main)
                pieces += detached
        survivors = []
        for t in s.forest:
            killed = invalid_edges(t, changed, m)
            killed[0] = bool(kernels.points_in(t.pts[:1], changed)[0])
            if killed.any():
                main, detached = split_tree(t, killed)
                pieces += ([main] if main is not None else []) + detached
            else:
                survivors.append(t)
        s.forest = survivors
        for t in pieces:
            s._admit(t)
        if s.path is not None and s._path_touches(changed, m):
            s.path = None
    if s.path is None:
        s._reroot(w, m)
    return s


def mprrt_cycle(s: MprrtPlanner, w: WorldState, budget: Budget, rng, m: MetricsCounters) -> PlannerAction:
    prune_and_prepend(s, w, m)
    if s.path is None:
        while budget.take():
            choice = mprrt_select_sample(s.forest, w.goal, w, rng)
            if choice.forest_index is None:
                path = grow_step(s.ta, s.tb, w, rng, m, target=choice.point)
            else:
                path = _reuse_subtree(s, choice, w, m)
            if path is not None:
                s._found(path)
                break
    if s.path is not None:
        return Move(s.path)
    return s._fallback(w, m)


def _reuse_subtree(s: MprrtPlanner, choice: SampleChoice, w: WorldState, m: MetricsCounters):
    sub = s.forest[choice.forest_index]
    q = choice.point
    for first, second in (("ta", "tb"), ("tb", "ta")):
        t = getattr(s, first)
        r = connect(t, q, w, m)
        if r.status is Status.REACHED:
            s.forest.pop(choice.forest_index)
            t.splice(sub, r.node)
            other = getattr(s, second)
            r2 = connect(other, q, w, m)
            if r2.status is Status.REACHED:
                if first == "ta":
                    return extract_path(s.ta, s.tb, r.node, r2.node)
                return extract_path(s.ta, s.tb, r2.node, r.node)
            return None
    return None
