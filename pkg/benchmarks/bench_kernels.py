"""Time the numba kernels against the numpy fallbacks on the same inputs.

    python benchmarks/bench_kernels.py [--repeat N]

Reports the best of N timings per kernel (after a warm-up call so that numba
compilation is not counted) and checks that both versions agree.
"""
import argparse
import timeit

import numpy as np

from dynplan import kernels


def boxes(rng, m, size=100.0):
    lo = rng.uniform(0, size - 5, (m, 2))
    return np.hstack([lo, lo + rng.uniform(0.5, 5, (m, 2))])


def cases(rng):
    R = boxes(rng, 200)
    P = rng.uniform(0, 100, (30, 2))
    E = rng.uniform(0, 100, (500, 4))
    Q = rng.uniform(0, 100, (500, 2))
    n = 4096
    pts = rng.uniform(0, 100, (n, 2))
    ids = np.arange(n, dtype=np.int64)
    alive = np.ones(n, bool)
    chunks = np.array([[0, n]], dtype=np.int64)
    q = np.array([50.0, 50.0])
    return {
        "seg_first_hit (200 boxes)": lambda k: k.seg_first_hit(1.0, 2.0, 97.0, 95.0, R),
        "path_hits (30 pts x 200)": lambda k: k.path_hits(P, R),
        "edges_hit (500 x 200)": lambda k: k.edges_hit(E, R),
        "points_in (500 x 200)": lambda k: k.points_in(Q, R),
        "path_min_dist (30 x 200)": lambda k: k.path_min_dist(P, R),
        "kd_build (4096)": lambda k: k.kd_build(pts.copy(), ids.copy(), 0, n),
        "kd_nearest (4096)": lambda k: k.kd_nearest(*built(k, pts, ids), alive, chunks, q),
    }


_built = {}


def built(k, pts, ids):
    key = id(k)
    if key not in _built:
        p, i = pts.copy(), ids.copy()
        k.kd_build(p, i, 0, len(p))
        _built[key] = (p, i)
    return _built[key]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ns = ap.parse_args()
    rng = np.random.default_rng(ns.seed)
    if kernels.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<28} {'numba [us]':>11} {'numpy [us]':>11} {'speedup':>8}")
    for name, fn in cases(rng).items():
        a, b = fn(kernels.NUMBA), fn(kernels.NUMPY)  # warm-up, also compiles
        if not name.startswith("kd_build"):
            assert np.array_equal(np.asarray(a), np.asarray(b)) or np.allclose(a, b), name
        t = {}
        for label, k in (("numba", kernels.NUMBA), ("numpy", kernels.NUMPY)):
            timer = timeit.Timer(lambda: fn(k))
            loops, _ = timer.autorange()
            t[label] = min(timer.repeat(ns.repeat, loops)) / loops * 1e6
        print(f"{name:<28} {t['numba']:>11.1f} {t['numpy']:>11.1f} {t['numpy'] / t['numba']:>7.1f}x")


if __name__ == "__main__":
    main()
