"""Planners built from an RRT seed plus local improvement.

``MultiStagePlanner`` grows one bidirectional RRT path, then keeps it alive
with cheap repairs aimed at the first collision (``arc`` and ``mut``) and a
greedy shortcut pass. If the same obstacle keeps the path blocked for a full
clock-second the RRT stage is restarted from the robot.

``RrtEpnPlanner`` seeds an evolutionary population with an RRT path and lets
EP/N evolve it while driving; it grows a fresh RRT individual after two
clock-seconds without any feasible one. ``EpnPlanner`` is plain EP/N from a
random population.
"""
from __future__ import annotations

import random
from typing import Optional

import numpy as np

from .base import Budget, Move, Planner, PlannerAction, Wait
from .common import ContractViolation, MetricsCounters
from .epn import (EpnPopulation, PathIndividual, Weights, evaluate, generation_step,
                  rebase_nodes, rebase_population)
from .rrt import Tree, grow_step
from .world import WorldState, changed_boxes, check_path, segment_free

BLOCK_RESTART = 1.0
NO_FEASIBLE_RESEED = 2.0


def _in_bounds(w: WorldState, p) -> bool:
    b = w.bounds
    return b.min_x <= p[0] <= b.max_x and b.min_y <= p[1] <= b.max_y


def arc(path: np.ndarray, first_col: int, w: WorldState, rng: random.Random, m: MetricsCounters,
        vicinity: Optional[float] = None, delta: Optional[float] = None,
        axis: Optional[int] = None) -> np.ndarray:
    """Detour around segment ``first_col`` by shifting a copy of it sideways.

    Both ends of the segment are offset by the same ``delta`` along one axis;
    the new pair is inserted if the three linking segments are free.
    """
    n = len(path)
    if not 0 <= first_col < n - 1:
        raise ContractViolation(f"first_col {first_col} outside 0..{n - 2}")
    if vicinity is None:
        vicinity = 4.0 * w.robot_half
    if delta is None:
        delta = rng.uniform(-vicinity, vicinity)
    if axis is None:
        axis = rng.randrange(2)
    p1, p2 = path[first_col], path[first_col + 1]
    n1, n2 = p1.copy(), p2.copy()
    n1[axis] += delta
    n2[axis] += delta
    if not (_in_bounds(w, n1) and _in_bounds(w, n2)):
        return path
    for a, b in ((p1, n1), (n1, n2), (n2, p2)):
        if not segment_free(w, a, b, m):
            return path
    return np.insert(path, first_col + 1, [n1, n2], axis=0)


def mut(path: np.ndarray, first_col: int, w: WorldState, rng: random.Random, m: MetricsCounters,
        vicinity: Optional[float] = None, offset=None) -> np.ndarray:
    """Jiggle the interior node at (or nearest to) ``first_col``."""
    n = len(path)
    if not 0 <= first_col < n:
        raise ContractViolation(f"first_col {first_col} outside 0..{n - 1}")
    if n < 3:
        return path
    j = min(max(first_col, 1), n - 2)
    if vicinity is None:
        vicinity = 4.0 * w.robot_half
    if offset is None:
        offset = (rng.uniform(-vicinity, vicinity), rng.uniform(-vicinity, vicinity))
    q = path[j] + np.asarray(offset, float)
    if not _in_bounds(w, q):
        return path
    if segment_free(w, path[j - 1], q, m) and segment_free(w, q, path[j + 1], m):
        out = path.copy()
        out[j] = q
        return out
    return path


def post_process(path: np.ndarray, w: WorldState, m: MetricsCounters) -> np.ndarray:
    """Greedy left-to-right passes removing nodes that can be skipped.

    A deletion late in a pass can open a shortcut behind it, so passes repeat
    until one removes nothing; this makes the result a fixed point.
    """
    pts = list(path)
    while True:
        n = len(pts)
        i = 0
        while i < len(pts) - 2:
            if segment_free(w, pts[i], pts[i + 2], m):
                del pts[i + 1]
            else:
                i += 1
        if len(pts) == n:
            break
    if len(pts) == len(path):
        return path
    return np.array(pts)


class MultiStagePlanner(Planner):
    name = "multistage"

    def __init__(self, w: WorldState, rng, clock=None):
        super().__init__(w, rng, clock)
        self.phase = "initial_rrt"
        self.ta = Tree(w.robot_pos)
        self.tb = Tree(w.goal)
        self.blocking: Optional[tuple[int, float]] = None
        self.vicinity = 4.0 * w.robot_half
        self.restarts = 0
        self._tail: Optional[np.ndarray] = None

    def on_moved(self, rest: np.ndarray) -> None:
        if self._tail is None:
            self.path = rest
        else:
            head = rest[:1] if len(rest) == 2 and np.array_equal(rest[0], rest[1]) else rest
            self.path = np.vstack([head, self._tail])

    def tree_sizes(self):
        return (self.ta.n, self.tb.n) if self.ta is not None else (0, 0)

    def cycle(self, w: WorldState, budget: Budget, m: MetricsCounters) -> PlannerAction:
        return multistage_cycle(self, w, budget, self.rng, m)

    def restart(self, w: WorldState) -> None:
        self.phase = "initial_rrt"
        self.path = None
        self.blocking = None
        self.ta = Tree(w.robot_pos)
        self.tb = Tree(w.goal)
        self.restarts += 1


def multistage_cycle(s: MultiStagePlanner, w: WorldState, budget: Budget, rng,
                     m: MetricsCounters) -> PlannerAction:
    if s.phase == "initial_rrt":
        while budget.take():
            path = grow_step(s.ta, s.tb, w, rng, m)
            if path is not None:
                s.path = path
                s.phase = "navigating"
                s.ta = s.tb = None
                break
        if s.phase == "initial_rrt":
            return Wait(replanning=True)
    path = s.path
    rep = check_path(w, path, m)
    while not rep.feasible and budget.take():
        fixed = arc(path, rep.first_collision_vertex, w, rng, m, s.vicinity)
        if fixed is not path:
            path = fixed
            rep = check_path(w, path, m)
            if rep.feasible:
                break
        fixed = mut(path, rep.first_collision_vertex, w, rng, m, s.vicinity)
        if fixed is not path:
            path = fixed
            rep = check_path(w, path, m)
    shorter = post_process(path, w, m)
    if shorter is not path:
        path = shorter
        rep = check_path(w, path, m)
    s.path = path
    s._tail = None
    if rep.feasible:
        s.blocking = None
        return Move(path)
    now = s.clock(w)
    if s.blocking is None or s.blocking[0] != rep.blocking_obstacle:
        s.blocking = (rep.blocking_obstacle, now)
    elif now - s.blocking[1] >= BLOCK_RESTART:
        s.restart(w)
        return Wait(replanning=True)
    fc = rep.first_collision_vertex
    if fc > 0:
        # keep driving along the collision-free prefix, stopping short of the blocked segment
        s._tail = path[fc + 1:]
        return Move(path[: fc + 1])
    return Wait(replanning=True)


class EpnPlanner(Planner):
    """EP/N driving on its own from a random initial population."""

    name = "epn"

    def __init__(self, w: WorldState, rng, clock=None, weights: Weights = Weights()):
        super().__init__(w, rng, clock)
        self.weights = weights
        self.pop: Optional[EpnPopulation] = None
        self.followed: Optional[int] = None
        self._seen: Optional[WorldState] = None
        self._moved = False

    def tree_sizes(self):
        return (0, 0)

    def _start(self, w: WorldState, m: MetricsCounters, seeds=()) -> None:
        self.pop = EpnPopulation.random(w, self.rng, m, seeds=seeds, weights=self.weights)
        self._seen = w

    def _refresh(self, w: WorldState, m: MetricsCounters) -> None:
        """Re-pin and re-score everyone after the robot moved or obstacles changed."""
        if self._moved or changed_boxes(self._seen, w).shape[0]:
            rebase_population(self.pop, w.robot_pos, w, m, skip=self.followed)
        self._seen = w
        self._moved = False

    def _evolve(self, w: WorldState, budget: Budget, m: MetricsCounters) -> None:
        while budget.take():
            generation_step(self.pop, w, self.rng, m)

    def _act(self, w: WorldState) -> PlannerAction:
        i = self.pop.best_index()
        best = self.pop.individuals[i]
        if best.feasible:
            self.followed = i
            self.path = best.nodes
            return Move(best.nodes)
        self.followed = None
        self.path = None
        return Wait(replanning=True)

    def cycle(self, w: WorldState, budget: Budget, m: MetricsCounters) -> PlannerAction:
        if self.pop is None:
            self._start(w, m)
        else:
            self._refresh(w, m)
        self._evolve(w, budget, m)
        return self._act(w)

    def on_moved(self, rest: np.ndarray) -> None:
        self._moved = True
        if self.followed is not None:
            ind = self.pop.individuals[self.followed]
            ind.nodes = np.asarray(rest, float).copy()
        self.path = rest


class RrtEpnPlanner(EpnPlanner):
    name = "rrt-epn"

    def __init__(self, w: WorldState, rng, clock=None, weights: Weights = Weights()):
        super().__init__(w, rng, clock, weights)
        self.phase = "initial_rrt"
        self.ta: Optional[Tree] = Tree(w.robot_pos)
        self.tb: Optional[Tree] = Tree(w.goal)
        self.last_feasible = 0.0
        self.reseeds = 0

    def tree_sizes(self):
        return (self.ta.n, self.tb.n) if self.ta is not None else (0, 0)

    def _grow(self, w: WorldState, budget: Budget, m: MetricsCounters) -> Optional[np.ndarray]:
        while budget.take():
            path = grow_step(self.ta, self.tb, w, self.rng, m)
            if path is not None:
                self.ta = self.tb = None
                return path
        return None

    def cycle(self, w: WorldState, budget: Budget, m: MetricsCounters) -> PlannerAction:
        return rrt_epn_cycle(self, w, budget, self.rng, m)


def rrt_epn_cycle(s: RrtEpnPlanner, w: WorldState, budget: Budget, rng,
                  m: MetricsCounters) -> PlannerAction:
    now = s.clock(w)
    if s.phase == "initial_rrt":
        path = s._grow(w, budget, m)
        if path is None:
            return Wait(replanning=True)
        s._start(w, m, seeds=[path])
        s.phase = "navigating"
        s.last_feasible = now
    else:
        s._refresh(w, m)
        if s.ta is not None:
            # a reseeding RRT is in progress; it gets budget before evolution
            path = s._grow(w, budget, m)
            if path is not None:
                kid = PathIndividual(rebase_nodes(path, w.robot_pos))
                evaluate(kid, w, m, s.pop.weights)
                j = s.pop.worst_index()
                s.pop.individuals[j] = kid
                if s.followed == j:
                    s.followed = None
                s.last_feasible = now
                s.reseeds += 1
    s._evolve(w, budget, m)
    act = s._act(w)
    if isinstance(act, Move):
        s.last_feasible = now
        s.ta = s.tb = None
    elif s.ta is None and now - s.last_feasible >= NO_FEASIBLE_RESEED:
        s.ta = Tree(w.robot_pos)
        s.tb = Tree(w.goal)
    return act
