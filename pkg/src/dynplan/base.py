"""Uniform planner interface driven by the trial loop.

Each tick the harness calls :meth:`Planner.cycle` with a fresh world snapshot
and a :class:`Budget`; the planner answers with a :class:`Move` along a
polyline starting at the robot, or a :class:`Wait`. After moving, the harness
hands back the unconsumed part of the path through :meth:`Planner.on_moved`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .common import MetricsCounters
from .world import WorldState


@dataclass(frozen=True, eq=False)
class Move:
    path: np.ndarray


@dataclass(frozen=True)
class Wait:
    replanning: bool = False


PlannerAction = Union[Move, Wait]


class Budget:
    """Per-tick allowance: a count of planner iterations or milliseconds."""

    def __init__(self, mode: str = "iterations", value: float = 300):
        if mode not in ("iterations", "wallclock"):
            raise ValueError(f"unknown budget mode {mode!r}")
        self.mode = mode
        self.value = value
        self.used = 0
        self._t0 = 0.0

    def start(self) -> "Budget":
        self.used = 0
        self._t0 = time.perf_counter()
        return self

    def take(self) -> bool:
        """Claim one iteration; False once the allowance is spent."""
        if self.mode == "iterations":
            if self.used >= self.value:
                return False
        elif (time.perf_counter() - self._t0) * 1000.0 >= self.value:
            return False
        self.used += 1
        return True


Clock = Callable[[WorldState], float]


def sim_clock(w: WorldState) -> float:
    return w.sim_time


class WallClock:
    def __init__(self):
        self._t0 = time.perf_counter()

    def __call__(self, w: WorldState) -> float:
        return time.perf_counter() - self._t0


class Planner:
    name = "planner"

    def __init__(self, w: WorldState, rng, clock: Optional[Clock] = None):
        self.rng = rng
        self.clock = clock or sim_clock
        self.path: Optional[np.ndarray] = None

    def cycle(self, w: WorldState, budget: Budget, m: MetricsCounters) -> PlannerAction:
        raise NotImplementedError

    def on_moved(self, rest: np.ndarray) -> None:
        if self.path is not None:
            self.path = rest

    def tree_sizes(self) -> tuple[int, int]:
        return (0, 0)
