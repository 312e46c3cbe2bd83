"""Evolutionary path planner (EP/N style).

Individuals are variable-length polylines from the robot to the goal. A
feasible individual is scored by length plus turning plus clearance penalty;
an unfeasible one by ``mu + eta`` (intersection count plus intersections per
unfeasible segment). Feasible always ranks ahead of unfeasible, so the two
scales never get compared.

Each generation applies one of eight operators to tournament-picked parents
and lets every offspring replace the current worst individual if it beats it.
Operator probabilities adapt to each operator's recent success ratio.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .common import ContractViolation, MetricsCounters
from .geometry import point_seg_dist
from .world import WorldState, check_path, eval_path, first_hit

POP_SIZE = 30
MAX_INTERIOR = 10
UPDATE_EVERY = 100
PROB_FLOOR = 0.01


class Op(IntEnum):
    CROSSOVER = 1
    MUTATE_1 = 2
    MUTATE_2 = 3
    INSERT_DELETE = 4
    DELETE = 5
    SWAP = 6
    SMOOTH = 7
    REPAIR = 8


N_OPS = len(Op)


@dataclass(frozen=True)
class Weights:
    dist: float = 1.0
    smooth: float = 1.0
    clear: float = 1.0


@dataclass(eq=False)
class PathIndividual:
    nodes: np.ndarray
    fitness: float = math.inf
    feasible: bool = False
    node_ok: Optional[np.ndarray] = None  # b: node outside every obstacle
    seg_ok: Optional[np.ndarray] = None  # b: segment leaving the node is free
    blocking: Optional[tuple[int, int]] = None  # (first bad segment, obstacle id)

    @property
    def key(self) -> tuple[bool, float]:
        """Sort key: smaller is better."""
        return (not self.feasible, self.fitness)

    def copy(self) -> "PathIndividual":
        return PathIndividual(self.nodes.copy(), self.fitness, self.feasible,
                              self.node_ok, self.seg_ok, self.blocking)


def turning_angles(P: np.ndarray) -> np.ndarray:
    """Deviation from straight at each interior node, in [0, pi]."""
    if len(P) < 3:
        return np.zeros(0)
    u = P[1:-1] - P[:-2]
    v = P[2:] - P[1:-1]
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    dot = (u * v).sum(axis=1)
    return np.abs(np.arctan2(cross, dot))


def evaluate(ind: PathIndividual, w: WorldState, m: MetricsCounters,
             weights: Weights = Weights()) -> tuple[float, bool]:
    P = ind.nodes
    rep = check_path(w, P, m)
    boxes = w.visible_boxes
    ind.seg_ok = rep.segment_hits == 0
    ind.node_ok = ~kernels.points_in(P, boxes) if boxes.shape[0] else np.ones(len(P), bool)
    ind.feasible = rep.feasible
    if rep.feasible:
        ind.blocking = None
        f = weights.dist * eval_path(P)
        if weights.smooth:
            f += weights.smooth * float(turning_angles(P).sum())
        if weights.clear:
            tau = 2.0 * w.robot_half
            d = kernels.path_min_dist(P, boxes)
            f += weights.clear * float(np.maximum(0.0, tau - d).sum())
        ind.fitness = f
    else:
        ind.blocking = (rep.first_collision_vertex, rep.blocking_obstacle)
        ind.fitness = rep.total_intersections + rep.eta
    return ind.fitness, ind.feasible


class OperatorTable:
    def __init__(self, n: int = N_OPS, floor: float = PROB_FLOOR, every: int = UPDATE_EVERY):
        self.probs = np.full(n, 1.0 / n)
        self.attempts = np.zeros(n)
        self.successes = np.zeros(n)
        self.floor = floor
        self.every = every
        self.applications = 0

    def record(self, op: int, success: bool) -> None:
        k = int(op) - 1
        self.attempts[k] += 1
        self.successes[k] += success
        self.applications += 1
        if self.applications % self.every == 0:
            self.adapt()

    def adapt(self) -> None:
        """Probabilities proportional to (s+1)/(a+1), floored, then halve the counters."""
        self.probs = floored((self.successes + 1) / (self.attempts + 1), self.floor)
        self.attempts *= 0.5
        self.successes *= 0.5


def floored(raw: np.ndarray, floor: float) -> np.ndarray:
    """Normalize ``raw`` so that no entry is below ``floor`` (water filling)."""
    p = raw / raw.sum()
    pinned = np.zeros(len(p), bool)
    while True:
        low = (p < floor) & ~pinned
        if not low.any():
            break
        pinned |= low
        free = ~pinned
        p = np.where(pinned, floor, p)
        p[free] = raw[free] / raw[free].sum() * (1.0 - floor * pinned.sum())
    return p / p.sum()


def select_operator(t: OperatorTable, rng: random.Random, u: Optional[float] = None) -> Op:
    if u is None:
        u = rng.random()
    k = int(np.searchsorted(np.cumsum(t.probs), u, side="right"))
    return Op(min(k, len(t.probs) - 1) + 1)


# -- operators ----------------------------------------------------------------------

def random_individual(w: WorldState, rng: random.Random, start=None) -> PathIndividual:
    b = w.bounds
    k = rng.randint(1, MAX_INTERIOR)
    P = np.empty((k + 2, 2))
    P[0] = w.robot_pos if start is None else start
    P[-1] = w.goal
    for i in range(1, k + 1):
        P[i] = (b.min_x + rng.random() * b.width, b.min_y + rng.random() * b.height)
    return PathIndividual(P)


def crossover(A: np.ndarray, B: np.ndarray, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Cut ``A`` after index ``i`` and ``B`` after ``j`` and swap tails."""
    c1 = np.vstack([A[: i + 1], B[j + 1:]])
    c2 = np.vstack([B[: j + 1], A[i + 1:]])
    c1[0], c1[-1] = A[0], A[-1]
    c2[0], c2[-1] = B[0], B[-1]
    return c1, c2


def _clip(w: WorldState, x: float, y: float) -> tuple[float, float]:
    b = w.bounds
    return min(max(x, b.min_x), b.max_x), min(max(y, b.min_y), b.max_y)


def _mutate(P: np.ndarray, w: WorldState, rng: random.Random, spread_x: float, spread_y: float):
    if len(P) < 3:
        return None
    P = P.copy()
    i = rng.randint(1, len(P) - 2)
    P[i] = _clip(w, P[i, 0] + rng.uniform(-spread_x, spread_x), P[i, 1] + rng.uniform(-spread_y, spread_y))
    return P


def _insert_delete(ind: PathIndividual, w: WorldState, rng: random.Random):
    if ind.feasible:
        return None
    P = ind.nodes
    keep = ind.node_ok.copy()
    keep[0] = keep[-1] = True
    out = [P[0]]
    for i in range(1, len(P)):
        a = out[-1]
        if not keep[i]:
            continue
        # a fresh random node near the midpoint of every blocked segment
        if not ind.seg_ok[i - 1] or not keep[i - 1]:
            mid = 0.5 * (a + P[i])
            r = max(float(np.hypot(*(P[i] - a))), 2.0 * w.robot_half)
            out.append(np.array(_clip(w, mid[0] + rng.uniform(-r, r), mid[1] + rng.uniform(-r, r))))
        out.append(P[i])
    return np.array(out)


def deletable(P: np.ndarray, w: WorldState, m: MetricsCounters) -> list[int]:
    """Interior nodes whose neighbours see each other directly."""
    return [i for i in range(1, len(P) - 1)
            if first_hit(w, P[i - 1], P[i + 1], m)[1] < 0]


def _delete(ind: PathIndividual, w: WorldState, rng: random.Random, m: MetricsCounters):
    P = ind.nodes
    if len(P) < 3:
        return None
    if ind.feasible:
        cand = deletable(P, w, m)
        i = rng.choice(cand) if cand else rng.randint(1, len(P) - 2)
    else:
        i = rng.randint(1, len(P) - 2)
    return np.delete(P, i, axis=0)


def _swap(P: np.ndarray, rng: random.Random):
    if len(P) < 4:
        return None
    P = P.copy()
    i = rng.randint(1, len(P) - 3)
    P[[i, i + 1]] = P[[i + 1, i]]
    return P


def _smooth(ind: PathIndividual, rng: random.Random):
    if not ind.feasible or len(ind.nodes) < 3:
        return None
    P = ind.nodes
    th = turning_angles(P)
    total = float(th.sum())
    if total <= 0.0:
        return None
    u = rng.random() * total
    i = min(int(np.searchsorted(np.cumsum(th), u, side="right")), len(th) - 1) + 1
    s, t = rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5)
    n1 = P[i] + s * (P[i - 1] - P[i])
    n2 = P[i] + t * (P[i + 1] - P[i])
    return np.vstack([P[:i], n1, n2, P[i + 1:]])


def repair_corners(P: np.ndarray, seg: int, box: np.ndarray, tau: float) -> list[np.ndarray]:
    """Corners of ``box`` grown by ``tau``, nearest to segment ``seg`` first."""
    x0, y0, x1, y1 = box[0] - tau, box[1] - tau, box[2] + tau, box[3] + tau
    a, b = P[seg], P[seg + 1]
    cs = [np.array(c) for c in ((x0, y0), (x1, y0), (x0, y1), (x1, y1))]
    return sorted(cs, key=lambda c: point_seg_dist(c[0], c[1], a[0], a[1], b[0], b[1]))


def _repair(ind: PathIndividual, w: WorldState, m: MetricsCounters):
    if ind.feasible or ind.blocking is None:
        return None
    seg, oid = ind.blocking
    P = ind.nodes
    k = int(np.flatnonzero(w.ids == oid)[0])
    box = w.boxes[k]
    if w.inflate:
        box = box + np.array([-1.0, -1.0, 1.0, 1.0]) * w.robot_half
    b = w.bounds
    fallback = None
    for c in repair_corners(P, seg, box, 2.0 * w.robot_half):
        if not (b.min_x <= c[0] <= b.max_x and b.min_y <= c[1] <= b.max_y):
            continue
        if first_hit(w, P[seg], c, m)[1] < 0 and first_hit(w, c, P[seg + 1], m)[1] < 0:
            return np.insert(P, seg + 1, c, axis=0)
        if fallback is None:
            pair = np.array([[*P[seg], *c], [*c, *P[seg + 1]]])
            if not kernels.edges_hit(pair, box[None, :]).any():
                fallback = c
    if fallback is None:
        return None
    return np.insert(P, seg + 1, fallback, axis=0)


def apply_operator(op: Op, parents: Sequence[PathIndividual], w: WorldState, rng: random.Random,
                   m: MetricsCounters, weights: Weights = Weights()) -> list[PathIndividual]:
    """Offspring of ``op``, already evaluated. An operator that does not apply
    (wrong feasibility, too few nodes) returns an unchanged copy of the parent."""
    op = Op(op)
    need = 2 if op is Op.CROSSOVER else 1
    if len(parents) != need:
        raise ContractViolation(f"{op.name} takes {need} parent(s), got {len(parents)}")
    p = parents[0]
    if op is Op.CROSSOVER:
        A, B = p.nodes, parents[1].nodes
        c1, c2 = crossover(A, B, rng.randint(0, len(A) - 2), rng.randint(0, len(B) - 2))
        kids = [PathIndividual(c1), PathIndividual(c2)]
        for k in kids:
            evaluate(k, w, m, weights)
        return kids
    tau = 2.0 * w.robot_half
    b = w.bounds
    if op is Op.MUTATE_1:
        P = _mutate(p.nodes, w, rng, tau, tau)
    elif op is Op.MUTATE_2:
        P = _mutate(p.nodes, w, rng, 0.25 * b.width, 0.25 * b.height)
    elif op is Op.INSERT_DELETE:
        P = _insert_delete(p, w, rng)
    elif op is Op.DELETE:
        P = _delete(p, w, rng, m)
    elif op is Op.SWAP:
        P = _swap(p.nodes, rng)
    elif op is Op.SMOOTH:
        P = _smooth(p, rng)
    else:
        P = _repair(p, w, m)
    if P is None:
        return [p.copy()]
    kid = PathIndividual(P)
    evaluate(kid, w, m, weights)
    if op is Op.MUTATE_1 and not kid.feasible:
        return [p.copy()]
    return [kid]


# -- population ---------------------------------------------------------------------

@dataclass(eq=False)
class EpnPopulation:
    individuals: list[PathIndividual]
    table: OperatorTable = field(default_factory=OperatorTable)
    generation: int = 0
    weights: Weights = Weights()

    @classmethod
    def random(cls, w: WorldState, rng: random.Random, m: MetricsCounters, size: int = POP_SIZE,
               seeds: Sequence[np.ndarray] = (), weights: Weights = Weights()) -> "EpnPopulation":
        inds = [PathIndividual(np.asarray(s, float).copy()) for s in seeds][:size]
        while len(inds) < size:
            inds.append(random_individual(w, rng))
        for ind in inds:
            evaluate(ind, w, m, weights)
        return cls(inds, weights=weights)

    def best_index(self) -> int:
        return min(range(len(self.individuals)), key=lambda i: self.individuals[i].key)

    def worst_index(self) -> int:
        return max(range(len(self.individuals)), key=lambda i: self.individuals[i].key)

    @property
    def best(self) -> PathIndividual:
        return self.individuals[self.best_index()]


def _tournament(pop: EpnPopulation, rng: random.Random) -> PathIndividual:
    inds = pop.individuals
    a = inds[rng.randrange(len(inds))]
    b = inds[rng.randrange(len(inds))]
    return a if a.key <= b.key else b


def generation_step(pop: EpnPopulation, w: WorldState, rng: random.Random,
                    m: MetricsCounters) -> EpnPopulation:
    op = select_operator(pop.table, rng)
    parents = [_tournament(pop, rng)]
    if op is Op.CROSSOVER:
        parents.append(_tournament(pop, rng))
    kids = apply_operator(op, parents, w, rng, m, pop.weights)
    success = False
    for kid in kids:
        success |= kid.key < parents[0].key
        j = pop.worst_index()
        if kid.key < pop.individuals[j].key:
            pop.individuals[j] = kid
    pop.table.record(op, success)
    pop.generation += 1
    return pop


def rebase_nodes(P: np.ndarray, robot) -> np.ndarray:
    """Pin the first node to ``robot``, dropping leading interior nodes the
    robot has already passed along the first segment."""
    r = np.asarray(robot, float)
    while len(P) > 2:
        d = P[1] - P[0]
        dd = float(d @ d)
        if dd == 0.0 or float((r - P[0]) @ d) >= dd:
            P = P[1:]
        else:
            break
    P = P.copy()
    P[0] = r
    return P


def rebase_population(pop: EpnPopulation, robot, w: WorldState, m: MetricsCounters,
                      skip: Optional[int] = None) -> EpnPopulation:
    for i, ind in enumerate(pop.individuals):
        if i != skip:
            ind.nodes = rebase_nodes(ind.nodes, robot)
        evaluate(ind, w, m, pop.weights)
    return pop
