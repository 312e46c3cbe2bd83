import random

import numpy as np
import pytest

from dynplan.common import ContractViolation, MetricsCounters
from dynplan.rrt import (Status, Tree, ancestor_or, connect, extend, extract_path, grow_step,
                         random_config, tree_depths)
from dynplan.world import check_path, segment_free

from util import make_world


def test_random_config_in_bounds_and_reproducible():
    w = make_world(bounds=(0, 0, 800, 800))
    a = [random_config(w, random.Random(9)) for _ in range(3)]
    assert a == [random_config(w, random.Random(9)) for _ in range(3)]
    rng = random.Random(9)
    assert all(0 <= x <= 800 and 0 <= y <= 800 for x, y in (random_config(w, rng) for _ in range(1000)))


def test_random_config_quadrants_uniform():
    w = make_world(bounds=(0, 0, 800, 800))
    rng = random.Random(10)
    n = 100_000
    counts = np.zeros(4, int)
    for _ in range(n):
        x, y = random_config(w, rng)
        counts[(x >= 400) * 2 + (y >= 400)] += 1
    sigma = np.sqrt(n * 0.25 * 0.75)
    assert (np.abs(counts - n / 4) < 4 * sigma).all()


def test_extend_empty_world_reaches():
    w = make_world()
    t = Tree((10, 10))
    r = extend(t, (20, 30), w, MetricsCounters())
    assert r.status is Status.REACHED
    assert tuple(t.pts[r.node]) == (20, 30)


def test_extend_wall_midpoint():
    w = make_world([(5, -10, 1, 20)], bounds=(-20, -20, 40, 40), robot=(0, 0), goal=(10, 0), half=1.0)
    t = Tree((0, 0))
    r = extend(t, (10, 0), w, MetricsCounters())
    # first contact at (5, 0) by clipping; midpoint of (0,0)->(5,0)
    assert r.status is Status.ADVANCED
    assert t.pts[r.node] == pytest.approx((2.5, 0.0))


def test_extend_flush_against_face_is_trapped():
    w = make_world([(5, -10, 1, 20)], bounds=(-20, -20, 40, 40), robot=(0, 0), goal=(10, 0))
    t = Tree((5 - 1e-9, 0))
    assert extend(t, (10, 0), w, MetricsCounters()).status is Status.TRAPPED
    assert t.n == 1


def test_connect_repeats_until_not_advanced():
    w = make_world([(5, -10, 1, 20)], bounds=(-20, -20, 40, 40), robot=(0, 0), goal=(10, 0), half=0.1)
    t = Tree((0, 0))
    r = connect(t, (10, 0), w, MetricsCounters())
    assert r.status is Status.TRAPPED
    xs = sorted(t.pts[: t.n, 0])
    assert xs[:3] == pytest.approx([0.0, 2.5, 3.75])


def test_extract_path_small_and_counts():
    ta, tb = Tree((0, 0)), Tree((10, 0))
    a = ta.add((5, 5), 0)
    b = tb.add((5, 5), 0)
    P = extract_path(ta, tb, a, b)
    assert P.tolist() == [[0, 0], [5, 5], [10, 0]]
    with pytest.raises(ContractViolation):
        extract_path(ta, tb, a, 0)


def test_extract_path_vertex_count():
    ta, tb = Tree((0, 0)), Tree((10, 0))
    i = ta.add((1, 1), 0)
    i = ta.add((2, 2), i)
    j = tb.add((9, 1), 0)
    j = tb.add((2, 2), j)
    P = extract_path(ta, tb, i, j)
    assert len(P) == ta.depth(i) + tb.depth(j) + 1


def u_world():
    # a U open to the left around the goal side
    return make_world([(40, 20, 40, 5), (40, 75, 40, 5), (75, 20, 5, 60)],
                      robot=(10, 50), goal=(60, 50))


def grow(w, rng, m, limit=5000):
    ta, tb = Tree(w.robot_pos), Tree(w.goal)
    for _ in range(limit):
        P = grow_step(ta, tb, w, rng, m)
        if P is not None:
            return P, ta, tb
    return None, ta, tb


def test_u_map_path_is_feasible_and_structural():
    w = u_world()
    m = MetricsCounters()
    for seed in range(20):
        P, ta, tb = grow(w, random.Random(seed), m)
        assert P is not None
        assert check_path(w, P, m).feasible
        assert tuple(P[0]) == tuple(w.robot_pos) and tuple(P[-1]) == tuple(w.goal)
        edges = {(tuple(t.pts[i]), tuple(t.pts[t.parent[i]])) for t in (ta, tb) for i in range(1, t.n)}
        for a, b in zip(P, P[1:]):
            assert (tuple(a), tuple(b)) in edges or (tuple(b), tuple(a)) in edges


def test_every_tree_edge_free_at_insertion():
    w = u_world()
    m = MetricsCounters()
    _, ta, tb = grow(w, random.Random(3), m)
    for t in (ta, tb):
        for i in range(1, t.n):
            assert segment_free(w, t.pts[i], t.pts[t.parent[i]], m)
        assert len(t.index) == t.n


def test_walled_goal_never_connects():
    w = make_world([(80, 80, 20, 2), (80, 80, 2, 20)], robot=(10, 10), goal=(95, 95))
    P, _, _ = grow(w, random.Random(4), MetricsCounters(), limit=500)
    assert P is None


def test_open_world_merges_fast():
    w = make_world()
    fast = sum(grow(w, random.Random(s), MetricsCounters(), limit=50)[0] is not None for s in range(100))
    assert fast >= 99


def test_tree_helpers():
    parent = np.array([-1, 0, 1, 1, 0, 4])
    assert tree_depths(parent).tolist() == [0, 1, 2, 2, 1, 2]
    flag = np.array([False, True, False, False, False, False])
    assert ancestor_or(flag, parent).tolist() == [False, True, True, True, False, False]


def test_subset_and_reroot():
    t = Tree((0, 0))
    a = t.add((1, 0), 0)
    b = t.add((2, 0), a)
    t.add((0, 1), 0)
    sub = t.subset(np.array([False, True, True, False]))
    assert sub.n == 2 and sub.parent[1] == 0 and tuple(sub.pts[0]) == (1, 0)
    with pytest.raises(ContractViolation):
        t.subset(np.array([False, True, False, True]))
    r = t.rerooted((3, 0), b)
    assert tuple(r.pts[0]) == (3, 0) and r.n == 5
    assert (r.parent[1: r.n] < np.arange(1, 5)).all()
    # the old root now hangs below the old branch
    old_root = next(i for i in range(r.n) if tuple(r.pts[i]) == (0, 0))
    assert r.depth(old_root) == 3
