"""Command line: ``run`` trials, ``aggregate`` a results CSV, ``render`` a trace."""
from __future__ import annotations

import argparse
import os
import sys

from .bench import aggregate, format_summary, read_csv, run_trial, run_trials, write_csv
from .maps import MapError, bundled_map
from .planners import PLANNERS
from .scenario import ENVIRONMENTS, ScenarioSpec
from .trace import TraceError, render_trace


def _map_path(arg: str) -> str:
    if os.path.exists(arg):
        return arg
    p = bundled_map(arg)
    if os.path.exists(p):
        return p
    raise MapError(f"no such map: {arg}")


def _budget(text: str) -> float:
    v = float(text)
    return int(v) if v.is_integer() else v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dynplan", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run seeded trials and write a CSV")
    r.add_argument("--map", default="desk.rects", help="map file, or the name of a bundled map")
    r.add_argument("--env", choices=ENVIRONMENTS, default="dynamic")
    r.add_argument("--planner", required=True,
                   help="comma-separated planners: " + ",".join(PLANNERS))
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--cutoff", type=float, default=300.0, help="simulated seconds")
    r.add_argument("--budget-mode", choices=("iterations", "wallclock"), default="iterations")
    r.add_argument("--budget", type=_budget, default=None,
                   help="iterations per tick (default 300) or ms per tick (default 20)")
    r.add_argument("--n-moving", type=int, default=30)
    r.add_argument("--tick", type=float, default=0.1)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out", default="-", help="CSV destination ('-' for stdout)")
    r.add_argument("--trace", help="JSON-lines trace of the first trial of the first planner")

    a = sub.add_parser("aggregate", help="summary table of a results CSV")
    a.add_argument("csv")

    v = sub.add_parser("render", help="SVG images from a trace")
    v.add_argument("trace")
    v.add_argument("--out", required=True, help="output directory")
    v.add_argument("--ticks", default="", help="comma-separated ticks to draw individually")
    return ap


def _cmd_run(ns) -> int:
    names = [p for p in ns.planner.split(",") if p]
    for p in names:
        if p not in PLANNERS:
            raise ValueError(f"unknown planner {p!r}; choose from {', '.join(PLANNERS)}")
    budget = ns.budget
    if budget is None:
        budget = 300 if ns.budget_mode == "iterations" else 20.0
    spec = ScenarioSpec(_map_path(ns.map), ns.env, ns.n_moving, ns.cutoff, ns.tick,
                        ns.budget_mode, budget, ns.seed)
    results = []
    for k, p in enumerate(names):
        if k == 0 and ns.trace:
            with open(ns.trace, "w", encoding="utf-8", newline="\n") as fh:
                first = run_trial(spec, p, ns.seed, 0, trace=fh)
            results.append(first)
            if ns.trials > 1:
                rest = run_trials(spec, p, ns.trials - 1, ns.seed + 1, ns.jobs)
                results += [r.__class__(**{**r.__dict__, "trial": r.trial + 1}) for r in rest]
        else:
            results += run_trials(spec, p, ns.trials, ns.seed, ns.jobs)
    text = write_csv(results)
    if ns.out == "-":
        sys.stdout.write(text)
    else:
        with open(ns.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        sys.stderr.write(format_summary(aggregate(results)))
    return 0


def _cmd_aggregate(ns) -> int:
    with open(ns.csv, encoding="utf-8", newline="") as fh:
        results = read_csv(fh)
    sys.stdout.write(format_summary(aggregate(results)))
    return 0


def _cmd_render(ns) -> int:
    ticks = [int(t) for t in ns.ticks.split(",") if t]
    with open(ns.trace, encoding="utf-8") as fh:
        docs = render_trace(fh, ticks)
    os.makedirs(ns.out, exist_ok=True)
    for name, svg in docs.items():
        with open(os.path.join(ns.out, name), "w", encoding="utf-8") as fh:
            fh.write(svg)
    sys.stderr.write(f"wrote {len(docs)} file(s) to {ns.out}\n")
    return 0


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return {"run": _cmd_run, "aggregate": _cmd_aggregate, "render": _cmd_render}[ns.cmd](ns)
    except (MapError, TraceError, ValueError, OSError) as e:
        sys.stderr.write(f"dynplan: error: {e}\n")
        return 1
