"""Trial loop, result aggregation and CSV output."""
from __future__ import annotations

import csv
import io
import math
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

from .base import Budget, Move, WallClock, sim_clock
from .common import MetricsCounters
from .planners import make_planner
from .scenario import ScenarioSpec, build_world
from .trace import TraceRecord, header_record, write_record
from .world import advance_robot, step_world, update_visibility

CSV_HEADER = ("planner", "map", "environment", "trial", "seed", "success", "cc", "nn",
              "sim_time", "wall_time_ms", "path_length")


@dataclass(frozen=True)
class TrialResult:
    planner: str
    trial: int
    seed: int
    success: bool
    collision_checks: int
    nn_lookups: int
    sim_time: float
    wall_time_ms: float
    path_length: float
    map: str = ""
    environment: str = ""
    deterministic: bool = True


def run_trial(spec: ScenarioSpec, planner: str, seed: int, trial: int = 0,
              trace: Optional[TextIO] = None) -> TrialResult:
    """Drive one planner from start until it reaches the goal or time runs out.

    Each tick: reveal nearby hidden obstacles, move the obstacles, let the
    planner think within the tick budget, then move the robot if asked to.
    Every random draw (scenario and planner) comes from ``Random(seed)``.
    """
    rng = random.Random(seed)
    w = build_world(spec, rng)
    wallclock = spec.budget_mode == "wallclock"
    clock = WallClock() if wallclock else sim_clock
    p = make_planner(planner, w, rng, clock=clock)
    m = MetricsCounters()
    budget = Budget(spec.budget_mode, spec.budget_value)
    dt = spec.tick_dt
    length = 0.0
    tick = 0
    success = False
    if trace is not None:
        write_record(trace, header_record(spec, planner, seed, w))
    t0 = time.perf_counter()
    while True:
        w = update_visibility(w)
        w = step_world(w, dt)
        act = p.cycle(w, budget.start(), m)
        if isinstance(act, Move):
            before = w.robot_pos
            w, rest = advance_robot(w, act.path, dt)
            length += math.dist(before, w.robot_pos)
            p.on_moved(rest)
        tick += 1
        if trace is not None:
            write_record(trace, TraceRecord.capture(tick, w, p))
        if w.goal_reached and w.sim_time <= spec.cutoff:
            success = True
            break
        if w.sim_time >= spec.cutoff:
            break
    wall = (time.perf_counter() - t0) * 1000.0
    return TrialResult(planner, trial, seed, success, m.collision_checks, m.nn_lookups,
                       w.sim_time, wall, length, spec.map_name, spec.environment, not wallclock)


def _run_one(args) -> TrialResult:
    spec, planner, seed, trial = args
    return run_trial(spec, planner, seed, trial)


def run_trials(spec: ScenarioSpec, planner: str, trials: int, seed: Optional[int] = None,
               jobs: int = 1) -> list[TrialResult]:
    """Trials ``0..trials-1`` with seeds ``seed + i``; results in trial order."""
    base = spec.seed if seed is None else seed
    work = [(spec, planner, base + i, i) for i in range(trials)]
    if jobs <= 1:
        results = [_run_one(a) for a in work]
    else:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_run_one, work))
    return sorted(results, key=lambda r: (r.planner, r.trial))


@dataclass(frozen=True)
class SummaryRow:
    planner: str
    trials: int
    success_rate: float  # percent
    mean_cc: float
    mean_nn: float
    mean_time: float  # over successful trials; nan if none
    sd_time: float


def aggregate(results: Sequence[TrialResult]) -> list[SummaryRow]:
    if not results:
        raise ValueError("no results to aggregate")
    by: dict[str, list[TrialResult]] = {}
    for r in results:
        by.setdefault(r.planner, []).append(r)
    rows = []
    for name, rs in by.items():
        times = [r.sim_time for r in rs if r.success]
        rows.append(SummaryRow(
            name, len(rs), 100.0 * len(times) / len(rs),
            statistics.fmean(r.collision_checks for r in rs),
            statistics.fmean(r.nn_lookups for r in rs),
            statistics.fmean(times) if times else math.nan,
            statistics.stdev(times) if len(times) > 1 else math.nan))
    return rows


def format_summary(rows: Iterable[SummaryRow]) -> str:
    out = [f"{'planner':<12} {'S.R.[%]':>8} {'C.C.':>10} {'N.N.':>8} {'time[s]':>16}"]
    for r in rows:
        out.append(f"{r.planner:<12} {r.success_rate:>8.1f} {r.mean_cc:>10.0f} {r.mean_nn:>8.0f}"
                   f" {r.mean_time:>8.2f} ± {r.sd_time:<5.2f}")
    return "\n".join(out) + "\n"


def _num(x: float) -> str:
    return repr(float(x))


def write_csv(results: Iterable[TrialResult], out: Optional[TextIO] = None) -> str:
    """CSV text (LF newlines). Wall time is left blank for deterministic runs
    so that the file is a pure function of its inputs."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    for r in results:
        wr.writerow([r.planner, r.map, r.environment, r.trial, r.seed, int(r.success),
                     r.collision_checks, r.nn_lookups, _num(r.sim_time),
                     "" if r.deterministic else _num(r.wall_time_ms), _num(r.path_length)])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_csv(src: TextIO) -> list[TrialResult]:
    rows = list(csv.DictReader(src))
    out = []
    for row in rows:
        wall = row["wall_time_ms"]
        out.append(TrialResult(
            row["planner"], int(row["trial"]), int(row["seed"]), row["success"] == "1",
            int(row["cc"]), int(row["nn"]), float(row["sim_time"]),
            float(wall) if wall else math.nan, float(row["path_length"]),
            row["map"], row["environment"], wall == ""))
    return out
