"""Hot numeric kernels: segment/box collision batches and kd-tree search.

Every kernel exists twice. The loop version is compiled with ``numba.njit``;
the fallback is vectorized numpy (or plain recursion where numpy has nothing
better). Set ``DYNPLAN_NUMBA=0`` in the environment to force the fallback; it
is also used automatically when numba cannot be imported.

Both sets are importable directly as :data:`NUMBA` and :data:`NUMPY` for the
benchmark and for cross-checking tests. Box arrays are ``(m, 4)`` float64
rows of ``(x0, y0, x1, y1)``.
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

from . import geometry as _g

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("DYNPLAN_NUMBA", "1").lower() not in (
    "0", "false", "no", "off")


# -- numpy fallbacks -------------------------------------------------------------

def _np_entry(ax, ay, bx, by, R):
    """Broadcast Liang-Barsky; returns entry parameters with -1 for misses.

    ``ax..by`` have shape (n, 1) and ``R`` is (m, 4); result is (n, m).
    """
    x0, y0, x1, y1 = R[:, 0], R[:, 1], R[:, 2], R[:, 3]
    rev = (bx < ax) | ((bx == ax) & (by < ay))
    ax, bx = np.where(rev, bx, ax), np.where(rev, ax, bx)
    ay, by = np.where(rev, by, ay), np.where(rev, ay, by)
    t0 = np.zeros(np.broadcast_shapes(ax.shape, x0.shape))
    t1 = np.ones_like(t0)
    ok = np.ones(t0.shape, dtype=bool)
    for a, b, lo, hi in ((ax, bx, x0, x1), (ay, by, y0, y1)):
        d = b - a
        flat = d == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (lo - a) / d
            tb = (hi - a) / d
        swap = ta > tb
        ta, tb = np.where(swap, tb, ta), np.where(swap, ta, tb)
        ok &= (np.maximum(a, b) >= lo) & (np.minimum(a, b) <= hi)
        t0 = np.where(flat, t0, np.maximum(t0, ta))
        t1 = np.where(flat, t1, np.minimum(t1, tb))
        ok &= t0 <= t1
    return np.where(ok, np.where(rev, 1.0 - t1, t0), -1.0)


def _np_seg_first_hit(ax, ay, bx, by, R):
    if R.shape[0] == 0:
        return -1.0, -1
    t = _np_entry(np.array([[ax]]), np.array([[ay]]), np.array([[bx]]),
                  np.array([[by]]), R)[0]
    hit = t >= 0.0
    if not hit.any():
        return -1.0, -1
    masked = np.where(hit, t, np.inf)
    k = int(np.argmin(masked))
    return float(masked[k]), k


def _np_path_hits(P, R):
    n = P.shape[0] - 1
    if R.shape[0] == 0 or n <= 0:
        return np.zeros(max(n, 0), np.int64), np.full(max(n, 0), -1, np.int64)
    t = _np_entry(P[:-1, :1], P[:-1, 1:2], P[1:, :1], P[1:, 1:2], R)
    hit = t >= 0.0
    counts = hit.sum(axis=1).astype(np.int64)
    first = np.argmin(np.where(hit, t, np.inf), axis=1).astype(np.int64)
    first[counts == 0] = -1
    return counts, first


def _np_edges_hit(E, R):
    if R.shape[0] == 0 or E.shape[0] == 0:
        return np.zeros(E.shape[0], dtype=bool)
    t = _np_entry(E[:, :1], E[:, 1:2], E[:, 2:3], E[:, 3:4], R)
    return (t >= 0.0).any(axis=1)


def _np_points_in(P, R):
    if R.shape[0] == 0 or P.shape[0] == 0:
        return np.zeros(P.shape[0], dtype=bool)
    px, py = P[:, :1], P[:, 1:2]
    return ((px >= R[:, 0]) & (px <= R[:, 2]) & (py >= R[:, 1]) & (py <= R[:, 3])).any(axis=1)


def _np_point_box_dist(px, py, R):
    dx = np.maximum(np.maximum(R[:, 0] - px, 0.0), px - R[:, 2])
    dy = np.maximum(np.maximum(R[:, 1] - py, 0.0), py - R[:, 3])
    return np.hypot(dx, dy)


def _np_point_seg_dist(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    ll = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ll == 0.0, 0.0, ((px - ax) * dx + (py - ay) * dy) / ll)
    t = np.clip(t, 0.0, 1.0)
    cx = ax + t * dx - px
    cy = ay + t * dy - py
    d = np.hypot(cx, cy)
    d = np.where(t <= 0.0, np.hypot(px - ax, py - ay), d)
    return np.where(t >= 1.0, np.hypot(px - bx, py - by), d)


def _np_path_min_dist(P, R):
    n = P.shape[0] - 1
    if R.shape[0] == 0:
        return np.full(n, np.inf)
    ax, ay, bx, by = P[:-1, :1], P[:-1, 1:2], P[1:, :1], P[1:, 1:2]
    d = np.minimum(_np_point_box_dist(ax, ay, R), _np_point_box_dist(bx, by, R))
    for cx, cy in ((R[:, 0], R[:, 1]), (R[:, 2], R[:, 1]), (R[:, 0], R[:, 3]), (R[:, 2], R[:, 3])):
        d = np.minimum(d, _np_point_seg_dist(cx, cy, ax, ay, bx, by))
    d = np.where(_np_entry(ax, ay, bx, by, R) >= 0.0, 0.0, d)
    return d.min(axis=1)


def _np_kd_build(pts, ids, lo, hi):
    """Reorder ``pts[lo:hi]``/``ids[lo:hi]`` in place into an implicit kd-tree.

    Node of range [l, h) sits at ``l + (h - l - 1) // 2`` (lower median), left
    subtree in [l, mid), right in [mid + 1, h); split axis is depth mod k.
    """
    k = pts.shape[1]

    def rec(l, h, depth):
        m = h - l
        if m <= 1:
            return
        med = (m - 1) // 2
        order = np.argpartition(pts[l:h, depth % k], med, kind="introselect")
        pts[l:h] = pts[l:h][order]
        ids[l:h] = ids[l:h][order]
        rec(l, l + med, depth + 1)
        rec(l + med + 1, h, depth + 1)

    rec(lo, hi, 0)


def _np_kd_nearest(pts, ids, alive, chunks, q):
    """Exact nearest alive point; ties go to the smallest id.

    The fallback scans every stored point instead of walking the trees.
    """
    n = int(chunks[-1, 1]) if chunks.shape[0] else 0
    if n == 0:
        return -1
    d2 = ((pts[:n] - q) ** 2).sum(axis=1)
    d2 = np.where(alive[:n], d2, np.inf)
    best = d2.min()
    if not np.isfinite(best):
        return -1
    cand = np.flatnonzero(d2 == best)
    return int(cand[np.argmin(ids[cand])])


# -- numba loop versions ------------------------------------------------------------

def _lp_seg_first_hit(ax, ay, bx, by, R):
    best = np.inf
    k = -1
    for j in range(R.shape[0]):
        t = _entry(ax, ay, bx, by, R[j, 0], R[j, 1], R[j, 2], R[j, 3])
        if t >= 0.0 and t < best:
            best = t
            k = j
    if k < 0:
        return -1.0, -1
    return best, k


def _lp_path_hits(P, R):
    n = P.shape[0] - 1
    if n < 0:
        n = 0
    counts = np.zeros(n, np.int64)
    first = np.full(n, -1, np.int64)
    for i in range(n):
        best = np.inf
        for j in range(R.shape[0]):
            t = _entry(P[i, 0], P[i, 1], P[i + 1, 0], P[i + 1, 1],
                       R[j, 0], R[j, 1], R[j, 2], R[j, 3])
            if t >= 0.0:
                counts[i] += 1
                if t < best:
                    best = t
                    first[i] = j
    return counts, first


def _lp_edges_hit(E, R):
    out = np.zeros(E.shape[0], np.bool_)
    for i in range(E.shape[0]):
        for j in range(R.shape[0]):
            if _entry(E[i, 0], E[i, 1], E[i, 2], E[i, 3],
                      R[j, 0], R[j, 1], R[j, 2], R[j, 3]) >= 0.0:
                out[i] = True
                break
    return out


def _lp_points_in(P, R):
    out = np.zeros(P.shape[0], np.bool_)
    for i in range(P.shape[0]):
        x = P[i, 0]
        y = P[i, 1]
        for j in range(R.shape[0]):
            if R[j, 0] <= x <= R[j, 2] and R[j, 1] <= y <= R[j, 3]:
                out[i] = True
                break
    return out


def _lp_path_min_dist(P, R):
    n = P.shape[0] - 1
    out = np.full(n, np.inf)
    for i in range(n):
        for j in range(R.shape[0]):
            d = _dist(P[i, 0], P[i, 1], P[i + 1, 0], P[i + 1, 1],
                      R[j, 0], R[j, 1], R[j, 2], R[j, 3])
            if d < out[i]:
                out[i] = d
    return out


def _lp_kd_build(pts, ids, lo, hi):
    k = pts.shape[1]
    stack = np.empty((128, 3), np.int64)
    sp = 0
    stack[0, 0] = lo
    stack[0, 1] = hi
    stack[0, 2] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        l = stack[sp, 0]
        h = stack[sp, 1]
        depth = stack[sp, 2]
        if h - l <= 1:
            continue
        ax = depth % k
        target = l + (h - l - 1) // 2
        # quickselect on [l, h) for position target
        a = l
        b = h - 1
        while a < b:
            pivot = pts[(a + b) // 2, ax]
            i = a
            j = b
            while i <= j:
                while pts[i, ax] < pivot:
                    i += 1
                while pts[j, ax] > pivot:
                    j -= 1
                if i <= j:
                    for c in range(k):
                        tmp = pts[i, c]
                        pts[i, c] = pts[j, c]
                        pts[j, c] = tmp
                    ti = ids[i]
                    ids[i] = ids[j]
                    ids[j] = ti
                    i += 1
                    j -= 1
            if target <= j:
                b = j
            elif target >= i:
                a = i
            else:
                break
        stack[sp, 0] = l
        stack[sp, 1] = target
        stack[sp, 2] = depth + 1
        sp += 1
        stack[sp, 0] = target + 1
        stack[sp, 1] = h
        stack[sp, 2] = depth + 1
        sp += 1


def _lp_kd_nearest(pts, ids, alive, chunks, q):
    k = pts.shape[1]
    best_d = np.inf
    best_id = np.iinfo(np.int64).max
    best = -1
    stack = np.empty((256, 3), np.int64)
    bound = np.empty(256)
    for c in range(chunks.shape[0]):
        sp = 0
        stack[0, 0] = chunks[c, 0]
        stack[0, 1] = chunks[c, 1]
        stack[0, 2] = 0
        bound[0] = 0.0
        sp = 1
        while sp > 0:
            sp -= 1
            if bound[sp] > best_d:
                continue
            l = stack[sp, 0]
            h = stack[sp, 1]
            depth = stack[sp, 2]
            if l >= h:
                continue
            m = l + (h - l - 1) // 2
            if alive[m]:
                d2 = 0.0
                for a in range(k):
                    diff = q[a] - pts[m, a]
                    d2 += diff * diff
                if d2 < best_d or (d2 == best_d and ids[m] < best_id):
                    best_d = d2
                    best_id = ids[m]
                    best = m
            ax = depth % k
            diff = q[ax] - pts[m, ax]
            if diff < 0.0:
                nl, nh, fl, fh = l, m, m + 1, h
            else:
                nl, nh, fl, fh = m + 1, h, l, m
            if fl < fh:
                stack[sp, 0] = fl
                stack[sp, 1] = fh
                stack[sp, 2] = depth + 1
                bound[sp] = diff * diff
                sp += 1
            if nl < nh:
                stack[sp, 0] = nl
                stack[sp, 1] = nh
                stack[sp, 2] = depth + 1
                bound[sp] = 0.0
                sp += 1
    return best


NUMPY = SimpleNamespace(
    seg_first_hit=_np_seg_first_hit,
    path_hits=_np_path_hits,
    edges_hit=_np_edges_hit,
    points_in=_np_points_in,
    path_min_dist=_np_path_min_dist,
    kd_build=_np_kd_build,
    kd_nearest=_np_kd_nearest,
)

if numba is not None:
    _jit = numba.njit(cache=True)
    _entry = _jit(_g.seg_rect_entry)
    _g_prd = _jit(_g.point_rect_dist)
    _g_psd = _jit(_g.point_seg_dist)

    @_jit
    def _dist(ax, ay, bx, by, x0, y0, x1, y1):
        if _entry(ax, ay, bx, by, x0, y0, x1, y1) >= 0.0:
            return 0.0
        d = min(_g_prd(ax, ay, x0, y0, x1, y1), _g_prd(bx, by, x0, y0, x1, y1))
        d = min(d, _g_psd(x0, y0, ax, ay, bx, by))
        d = min(d, _g_psd(x1, y0, ax, ay, bx, by))
        d = min(d, _g_psd(x0, y1, ax, ay, bx, by))
        d = min(d, _g_psd(x1, y1, ax, ay, bx, by))
        return d

    NUMBA = SimpleNamespace(
        seg_first_hit=_jit(_lp_seg_first_hit),
        path_hits=_jit(_lp_path_hits),
        edges_hit=_jit(_lp_edges_hit),
        points_in=_jit(_lp_points_in),
        path_min_dist=_jit(_lp_path_min_dist),
        kd_build=_jit(_lp_kd_build),
        kd_nearest=_jit(_lp_kd_nearest),
    )
else:  # pragma: no cover
    NUMBA = None

ACTIVE = NUMBA if USE_NUMBA else NUMPY

seg_first_hit = ACTIVE.seg_first_hit
path_hits = ACTIVE.path_hits
edges_hit = ACTIVE.edges_hit
points_in = ACTIVE.points_in
path_min_dist = ACTIVE.path_min_dist
kd_build = ACTIVE.kd_build
kd_nearest = ACTIVE.kd_nearest
