"""Map file readers.

Two formats are understood:

``rects`` (UTF-8, line oriented, ``#`` starts a comment)::

    bounds MINX MINY W H          # first non-comment line, exactly once
    robot X Y HALF SPEED          # once
    goal X Y                      # once
    rect X Y W H                  # static
    rect X Y W H moving VX VY
    rect X Y W H hidden

``pbm`` (P1 plain or P4 raw): every black pixel is an occupied unit cell at
``(col, rows - 1 - row)``; horizontal runs of black pixels become one
rectangle, and the image implies ``bounds 0 0 cols rows``. PBM carries no
robot or goal, so those come from keyword arguments (or free cells near two
opposite corners).
"""
from __future__ import annotations

import os
from importlib import resources
from typing import BinaryIO, Optional, Union

import numpy as np

from . import kernels
from .geometry import Rect
from .world import Kind, Obstacle, WorldState


class MapError(ValueError):
    """Unparseable or inconsistent map."""


Source = Union[str, os.PathLike, bytes, BinaryIO]


def bundled_map(name: str) -> str:
    """Filesystem path of a map shipped with the package (e.g. ``"desk.rects"``)."""
    return str(resources.files("dynplan") / "maps" / name)


def _read(source: Source) -> tuple[bytes, str]:
    if isinstance(source, bytes):
        return source, "<bytes>"
    if hasattr(source, "read"):
        return source.read(), getattr(source, "name", "<stream>")
    with open(source, "rb") as fh:
        return fh.read(), os.fspath(source)


def load_map(source: Source, fmt: Optional[str] = None, **opts) -> WorldState:
    """Parse a map into a fresh :class:`WorldState` (``sim_time`` 0).

    ``fmt`` is ``"rects"`` or ``"pbm"``; when omitted it is sniffed from the
    magic number. Extra keyword arguments (``robot``, ``goal``,
    ``robot_half``, ``robot_speed``, ``sensor_radius``, ``inflate``) override
    or complete what the file declares.
    """
    data, name = _read(source)
    if fmt is None:
        fmt = "pbm" if data[:2] in (b"P1", b"P4") else "rects"
    if fmt == "rects":
        w = _parse_rects(data, name, opts)
    elif fmt == "pbm":
        w = _parse_pbm(data, name, opts)
    else:
        raise MapError(f"unknown map format {fmt!r}")
    _validate(w, name)
    return w


def _validate(w: WorldState, name: str) -> None:
    solid = w.boxes[(w.kind == Kind.STATIC) & w.visible]
    for label, p in (("robot", w.robot_pos), ("goal", w.goal)):
        if not (w.bounds.min_x <= p.x <= w.bounds.max_x and w.bounds.min_y <= p.y <= w.bounds.max_y):
            raise MapError(f"{name}: {label} {tuple(p)} lies outside the bounds")
        if kernels.points_in(np.array([p], float), solid)[0]:
            raise MapError(f"{name}: {label} {tuple(p)} lies inside a static obstacle")


def _parse_rects(data: bytes, name: str, opts: dict) -> WorldState:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MapError(f"{name}: byte {e.start}: not UTF-8") from None
    bounds = robot = goal = None
    obstacles: list[Obstacle] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key, args = tok[0], tok[1:]

        def nums(n_min, n_max=None):
            n_max = n_min if n_max is None else n_max
            vals = []
            for a in args[:n_max]:
                try:
                    vals.append(float(a))
                except ValueError:
                    raise MapError(f"{name}:{lineno}: expected a number, got {a!r}") from None
            if len(vals) < n_min:
                raise MapError(f"{name}:{lineno}: '{key}' needs {n_min} numbers")
            return vals

        if bounds is None and key != "bounds":
            raise MapError(f"{name}:{lineno}: first statement must be 'bounds'")
        if key == "bounds":
            if bounds is not None:
                raise MapError(f"{name}:{lineno}: duplicate 'bounds'")
            if len(args) != 4:
                raise MapError(f"{name}:{lineno}: 'bounds' takes MINX MINY W H")
            try:
                bounds = Rect(*nums(4))
            except ValueError as e:
                raise MapError(f"{name}:{lineno}: {e}") from None
        elif key == "robot":
            if robot is not None:
                raise MapError(f"{name}:{lineno}: duplicate 'robot'")
            if len(args) != 4:
                raise MapError(f"{name}:{lineno}: 'robot' takes X Y HALF SPEED")
            robot = nums(4)
        elif key == "goal":
            if goal is not None:
                raise MapError(f"{name}:{lineno}: duplicate 'goal'")
            if len(args) != 2:
                raise MapError(f"{name}:{lineno}: 'goal' takes X Y")
            goal = nums(2)
        elif key == "rect":
            if len(args) < 4:
                raise MapError(f"{name}:{lineno}: 'rect' takes X Y W H [moving VX VY | hidden]")
            x, y, wd, ht = nums(4)
            try:
                shape = Rect(x, y, wd, ht)
            except ValueError as e:
                raise MapError(f"{name}:{lineno}: {e}") from None
            extra = args[4:]
            oid = len(obstacles)
            if not extra:
                obstacles.append(Obstacle(oid, shape))
            elif extra[0] == "hidden" and len(extra) == 1:
                obstacles.append(Obstacle(oid, shape, kind=Kind.HIDDEN, visible=False))
            elif extra[0] == "moving" and len(extra) == 3:
                try:
                    v = (float(extra[1]), float(extra[2]))
                except ValueError:
                    raise MapError(f"{name}:{lineno}: bad velocity {extra[1:]!r}") from None
                obstacles.append(Obstacle(oid, shape, v, Kind.MOVING))
            else:
                raise MapError(f"{name}:{lineno}: unexpected {' '.join(extra)!r}")
        else:
            raise MapError(f"{name}:{lineno}: unknown statement {key!r}")
    if bounds is None:
        raise MapError(f"{name}: missing 'bounds'")
    if robot is None and "robot" not in opts:
        raise MapError(f"{name}: missing 'robot'")
    if goal is None and "goal" not in opts:
        raise MapError(f"{name}: missing 'goal'")
    rx, ry, half, speed = robot if robot is not None else (0, 0, 2.5, 20.0)
    return _assemble(bounds, obstacles, opts, (rx, ry), goal, half, speed)


def _assemble(bounds, obstacles, opts, robot, goal, half, speed) -> WorldState:
    kw = {k: opts[k] for k in ("sensor_radius", "inflate") if k in opts}
    return WorldState.from_obstacles(
        bounds, obstacles,
        robot_pos=opts.get("robot", robot), goal=opts.get("goal", goal),
        robot_half=opts.get("robot_half", half), robot_speed=opts.get("robot_speed", speed), **kw)


def _pbm_tokens(data: bytes, name: str):
    """Yield (token, byte offset) from a PBM header/plain body, skipping comments."""
    i, n = 0, len(data)
    while i < n:
        c = data[i:i + 1]
        if c == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
                j += 1
            yield data[i:j], i, j
            i = j


def _parse_pbm(data: bytes, name: str, opts: dict) -> WorldState:
    magic = data[:2]
    if magic not in (b"P1", b"P4"):
        raise MapError(f"{name}: byte 0: not a PBM (magic {magic!r})")
    toks = _pbm_tokens(data[2:], name)
    dims = []
    end = 2
    for _ in range(2):
        try:
            tok, at, stop = next(toks)
        except StopIteration:
            raise MapError(f"{name}: byte {len(data)}: truncated header") from None
        if not tok.isdigit() or int(tok) <= 0:
            raise MapError(f"{name}: byte {at + 2}: bad dimension {tok!r}")
        dims.append(int(tok))
        end = stop + 2
    cols, rows = dims
    if magic == b"P1":
        bits = []
        for tok, at, _ in toks:
            for k, ch in enumerate(tok):
                if ch not in b"01":
                    raise MapError(f"{name}: byte {at + 2 + k}: bad pixel {chr(ch)!r}")
                bits.append(ch == ord("1"))
        if len(bits) < rows * cols:
            raise MapError(f"{name}: byte {len(data)}: expected {rows * cols} pixels, got {len(bits)}")
        img = np.array(bits[: rows * cols], bool).reshape(rows, cols)
    else:
        body = end + 1  # single whitespace after the width/height
        stride = (cols + 7) // 8
        raw = np.frombuffer(data[body:body + stride * rows], np.uint8)
        if raw.size < stride * rows:
            raise MapError(f"{name}: byte {len(data)}: raster truncated")
        img = np.unpackbits(raw.reshape(rows, stride), axis=1)[:, :cols].astype(bool)
    obstacles = []
    for r in range(rows):
        row = img[r]
        y = rows - 1 - r
        c = 0
        while c < cols:
            if row[c]:
                s = c
                while c < cols and row[c]:
                    c += 1
                obstacles.append(Obstacle(len(obstacles), Rect(s, y, c - s, 1)))
            else:
                c += 1
    bounds = Rect(0, 0, cols, rows)
    robot = opts.get("robot") or _free_cell(img, 0.05, 0.05)
    goal = opts.get("goal") or _free_cell(img, 0.95, 0.95)
    if robot is None or goal is None:
        raise MapError(f"{name}: image has no free cell for robot/goal")
    return _assemble(bounds, obstacles, opts, robot, goal, 0.5, 20.0)


def _free_cell(img: np.ndarray, fx: float, fy: float):
    rows, cols = img.shape
    free_r, free_c = np.nonzero(~img)
    if free_r.size == 0:
        return None
    cx = free_c + 0.5
    cy = rows - 1 - free_r + 0.5
    k = int(np.argmin((cx - fx * cols) ** 2 + (cy - fy * rows) ** 2))
    return (float(cx[k]), float(cy[k]))
