"""Scenario setup: turn a map plus an environment kind into a starting world.

* ``dynamic``: ``n_moving`` robot-sized boxes drift at 10-55% of the robot
  speed in uniformly random directions.
* ``partial``: a few hidden boxes, 3-4 robot sides wide, near the straight
  line from start to goal; they appear once the robot gets close.
* ``unknown``: every static obstacle of the map starts hidden.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import Rect
from .maps import load_map
from .world import Kind, Obstacle, WorldState

ENVIRONMENTS = ("dynamic", "partial", "unknown")
SPEED_RANGE = (0.10, 0.55)
N_HIDDEN = 4


@dataclass(frozen=True)
class ScenarioSpec:
    map_path: str
    environment: str = "dynamic"
    n_moving: int = 30
    cutoff: float = 300.0
    tick_dt: float = 0.1
    budget_mode: str = "iterations"
    budget_value: float = 300
    seed: int = 0
    map_options: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.environment not in ENVIRONMENTS:
            raise ValueError(f"environment must be one of {ENVIRONMENTS}, got {self.environment!r}")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")
        if not self.tick_dt > 0:
            raise ValueError("tick_dt must be positive")
        if self.budget_mode not in ("iterations", "wallclock"):
            raise ValueError(f"unknown budget mode {self.budget_mode!r}")

    @property
    def map_name(self) -> str:
        return self.map_path.replace("\\", "/").rsplit("/", 1)[-1]


def _overlaps(box, boxes: np.ndarray) -> bool:
    if boxes.shape[0] == 0:
        return False
    return bool(((box[0] < boxes[:, 2]) & (box[2] > boxes[:, 0])
                 & (box[1] < boxes[:, 3]) & (box[3] > boxes[:, 1])).any())


def _near(box, p, margin: float) -> bool:
    dx = max(box[0] - p[0], 0.0, p[0] - box[2])
    dy = max(box[1] - p[1], 0.0, p[1] - box[3])
    return math.hypot(dx, dy) < margin


def _place(w: WorldState, rng: random.Random, wd: float, ht: float, avoid: np.ndarray,
           margin: float, centre=None, spread: Optional[float] = None, tries: int = 10000):
    b = w.bounds
    for k in range(tries):
        if centre is None:
            x = b.min_x + rng.random() * (b.width - wd)
            y = b.min_y + rng.random() * (b.height - ht)
        else:
            # fresh centre each try; the spread widens slowly on crowded maps
            c = centre(rng)
            r = spread * (1.0 + k / 1000.0)
            x = c[0] - wd / 2 + rng.uniform(-r, r)
            y = c[1] - ht / 2 + rng.uniform(-r, r)
            if x < b.min_x or y < b.min_y or x + wd > b.max_x or y + ht > b.max_y:
                continue
        box = (x, y, x + wd, y + ht)
        if _overlaps(box, avoid) or _near(box, w.robot_pos, margin) or _near(box, w.goal, margin):
            continue
        return box
    raise RuntimeError("could not place an obstacle; map too crowded")


def build_world(spec: ScenarioSpec, rng: random.Random) -> WorldState:
    """Load the map and add the environment's obstacles, drawing from ``rng``."""
    w = load_map(spec.map_path, **spec.map_options)
    obstacles = w.obstacles
    statics = w.boxes[w.kind == Kind.STATIC]
    side = 2.0 * w.robot_half
    margin = 2.0 * side
    if spec.environment == "dynamic":
        lo, hi = SPEED_RANGE
        for _ in range(spec.n_moving):
            x0, y0, _, _ = _place(w, rng, side, side, statics, margin)
            speed = rng.uniform(lo, hi) * w.robot_speed
            heading = rng.uniform(0.0, 2.0 * math.pi)
            obstacles.append(Obstacle(len(obstacles), Rect(x0, y0, side, side),
                                      (speed * math.cos(heading), speed * math.sin(heading)),
                                      Kind.MOVING))
    elif spec.environment == "partial":
        a = np.asarray(w.robot_pos)
        g = np.asarray(w.goal)
        placed = statics
        for _ in range(N_HIDDEN):
            wd = rng.uniform(3.0, 4.0) * side
            ht = rng.uniform(3.0, 4.0) * side
            x0, y0, x1, y1 = _place(w, rng, wd, ht, placed, margin, spread=2 * side,
                                    centre=lambda r: a + r.uniform(0.2, 0.8) * (g - a))
            obstacles.append(Obstacle(len(obstacles), Rect(x0, y0, wd, ht),
                                      kind=Kind.HIDDEN, visible=False))
            placed = np.vstack([placed, [[x0, y0, x1, y1]]])
    else:
        obstacles = [Obstacle(o.id, o.shape, kind=Kind.HIDDEN, visible=False)
                     if o.kind == Kind.STATIC else o for o in obstacles]
    return WorldState.from_obstacles(
        w.bounds, obstacles, w.robot_pos, w.goal, w.robot_half, w.robot_speed,
        sensor_radius=w.sensor_radius, inflate=w.inflate)
