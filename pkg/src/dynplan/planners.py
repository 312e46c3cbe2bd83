"""Planner registry keyed by the names the command line accepts."""
from __future__ import annotations

from typing import Callable

from .base import Budget, Move, Planner, PlannerAction, Wait
from .common import MetricsCounters
from .hybrid import EpnPlanner, MultiStagePlanner, RrtEpnPlanner
from .replan import DrrtPlanner, MprrtPlanner
from .rrt import Tree, grow_step
from .world import WorldState, check_path


class IteratedRrtPlanner(Planner):
    """Offline bidirectional RRT, re-run from scratch whenever its path breaks."""

    name = "rrt"

    def __init__(self, w: WorldState, rng, clock=None):
        super().__init__(w, rng, clock)
        self.ta = Tree(w.robot_pos)
        self.tb = Tree(w.goal)

    def tree_sizes(self):
        return (self.ta.n, self.tb.n)

    def cycle(self, w: WorldState, budget: Budget, m: MetricsCounters) -> PlannerAction:
        if self.path is not None and not check_path(w, self.path, m).feasible:
            self.path = None
            self.ta = Tree(w.robot_pos)
            self.tb = Tree(w.goal)
        if self.path is None:
            while budget.take():
                path = grow_step(self.ta, self.tb, w, self.rng, m)
                if path is not None:
                    self.path = path
                    break
        if self.path is None:
            return Wait(replanning=True)
        return Move(self.path)


PLANNERS: dict[str, Callable[..., Planner]] = {
    "rrt": IteratedRrtPlanner,
    "drrt-adv": lambda w, rng, clock=None: DrrtPlanner(w, rng, adv=True, clock=clock),
    "drrt-noadv": lambda w, rng, clock=None: DrrtPlanner(w, rng, adv=False, clock=clock),
    "mprrt-adv": lambda w, rng, clock=None: MprrtPlanner(w, rng, adv=True, clock=clock),
    "mprrt-noadv": lambda w, rng, clock=None: MprrtPlanner(w, rng, adv=False, clock=clock),
    "epn": EpnPlanner,
    "rrt-epn": RrtEpnPlanner,
    "multistage": MultiStagePlanner,
}


def make_planner(name: str, w: WorldState, rng, clock=None) -> Planner:
    try:
        factory = PLANNERS[name]
    except KeyError:
        raise ValueError(f"unknown planner {name!r}; choose from {', '.join(PLANNERS)}") from None
    return factory(w, rng, clock=clock)
