"""Per-tick trace records (JSON lines) and their SVG rendering.

The first line of a trace describes the scenario (bounds, goal, planner);
every following line is one tick.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO
from xml.sax.saxutils import escape

from .world import WorldState


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    robot: tuple[float, float]
    obstacles: list  # [id, [x0, y0, x1, y1], visible]
    path: list
    tree_sizes: tuple[int, int]

    @classmethod
    def capture(cls, tick: int, w: WorldState, planner) -> "TraceRecord":
        obs = [[int(i), [float(v) for v in b], bool(vis)]
               for i, b, vis in zip(w.ids, w.boxes, w.visible)]
        path = [] if planner.path is None else [[float(x), float(y)] for x, y in planner.path]
        return cls(tick, (w.robot_pos.x, w.robot_pos.y), obs, path,
                   tuple(int(s) for s in planner.tree_sizes()))

    def to_dict(self) -> dict:
        return {"type": "tick", "tick": self.tick, "robot": list(self.robot),
                "obstacles": self.obstacles, "path": self.path,
                "tree_sizes": list(self.tree_sizes)}


def header_record(spec, planner: str, seed: int, w: WorldState) -> dict:
    b = w.bounds
    return {"type": "scenario", "planner": planner, "seed": seed, "map": spec.map_name,
            "environment": spec.environment, "bounds": [b.min_x, b.min_y, b.max_x, b.max_y],
            "goal": list(w.goal), "robot_half": w.robot_half}


def write_record(out: TextIO, rec) -> None:
    d = rec.to_dict() if isinstance(rec, TraceRecord) else rec
    out.write(json.dumps(d, separators=(",", ":")) + "\n")


def read_trace(lines: Iterable[str]) -> tuple[dict, list[TraceRecord]]:
    header = None
    recs: list[TraceRecord] = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            kind = d["type"]
            if kind == "scenario":
                if header is not None:
                    raise TraceError(f"line {n}: second scenario record")
                header = d
                continue
            if kind != "tick" or header is None:
                raise TraceError(f"line {n}: unexpected record type {kind!r}")
            r = TraceRecord(int(d["tick"]), tuple(d["robot"]), d["obstacles"], d["path"],
                            tuple(d["tree_sizes"]))
        except TraceError:
            raise
        except (ValueError, KeyError, TypeError) as e:
            raise TraceError(f"line {n}: malformed trace record ({e})") from None
        if recs and r.tick <= recs[-1].tick:
            raise TraceError(f"line {n}: tick {r.tick} does not increase")
        recs.append(r)
    if header is None:
        raise TraceError("trace has no scenario record")
    return header, recs


class _View:
    """World to viewport affine map (y flipped so up is up)."""

    def __init__(self, bounds, width: float = 800.0):
        self.x0, self.y0, self.x1, self.y1 = bounds
        self.s = width / (self.x1 - self.x0)
        self.w = width
        self.h = (self.y1 - self.y0) * self.s

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.x0) * self.s, (self.y1 - y) * self.s


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def _svg(header: dict, view: _View, body: list[str], title: str) -> str:
    gx, gy = view(*header["goal"])
    c = 6
    body = body + [
        f'<path d="M{_fmt(gx - c)},{_fmt(gy - c)} L{_fmt(gx + c)},{_fmt(gy + c)} '
        f'M{_fmt(gx - c)},{_fmt(gy + c)} L{_fmt(gx + c)},{_fmt(gy - c)}" '
        'stroke="blue" stroke-width="2" class="goal"/>']
    return ('<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{_fmt(view.w)}" height="{_fmt(view.h)}" '
            f'viewBox="0 0 {_fmt(view.w)} {_fmt(view.h)}">\n'
            f"<title>{escape(title)}</title>\n"
            f'<rect x="0" y="0" width="{_fmt(view.w)}" height="{_fmt(view.h)}" '
            'fill="white" stroke="black"/>\n' + "\n".join(body) + "\n</svg>\n")


def _obstacle_rects(view: _View, obstacles) -> list[str]:
    out = []
    for oid, (x0, y0, x1, y1), vis in obstacles:
        ax, ay = view(x0, y1)
        style = ('fill="gray"' if vis else
                 'fill="none" stroke="gray" stroke-dasharray="4,3"')
        out.append(f'<rect class="obstacle" data-id="{oid}" x="{_fmt(ax)}" y="{_fmt(ay)}" '
                   f'width="{_fmt((x1 - x0) * view.s)}" height="{_fmt((y1 - y0) * view.s)}" {style}/>')
    return out


def _polyline(view: _View, pts, cls: str, colour: str) -> str:
    coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in (view(x, y) for x, y in pts))
    return f'<polyline class="{cls}" points="{coords}" fill="none" stroke="{colour}"/>'


def render_trace(src: Iterable[str], ticks: Optional[Iterable[int]] = None,
                 width: float = 800.0) -> dict[str, str]:
    """SVG documents keyed by file name: ``overview.svg`` with the robot's
    trajectory, plus ``tick_NNNNN.svg`` for each requested tick."""
    header, recs = read_trace(src)
    view = _View(header["bounds"], width)
    half = header["robot_half"]
    out = {}
    if recs:
        last = recs[-1]
        body = _obstacle_rects(view, last.obstacles)
        body.append(_polyline(view, [r.robot for r in recs], "trajectory", "green"))
        out["overview.svg"] = _svg(header, view, body, f"{header['planner']} seed {header['seed']}")
    wanted = set(ticks or ())
    for r in recs:
        if r.tick not in wanted:
            continue
        body = _obstacle_rects(view, r.obstacles)
        if r.path:
            body.append(_polyline(view, r.path, "path", "red"))
        x, y = view(r.robot[0] - half, r.robot[1] + half)
        body.append(f'<rect class="robot" x="{_fmt(x)}" y="{_fmt(y)}" '
                    f'width="{_fmt(2 * half * view.s)}" height="{_fmt(2 * half * view.s)}" fill="green"/>')
        out[f"tick_{r.tick:05d}.svg"] = _svg(header, view, body, f"tick {r.tick}")
    return out
