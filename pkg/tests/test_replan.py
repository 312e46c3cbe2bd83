import random

import numpy as np
import pytest

from dynplan.base import Budget, Move, Wait
from dynplan.bench import run_trial
from dynplan.common import MetricsCounters
from dynplan.maps import bundled_map
from dynplan.replan import (CACHE_SIZE, FOREST_MAX, DrrtPlanner, MprrtPlanner, WaypointCache,
                            choose_target, invalidate_and_trim, mprrt_select_sample,
                            prune_and_prepend, split_tree)
from dynplan.rrt import Tree, connect
from dynplan.scenario import ScenarioSpec, build_world
from dynplan.world import advance_robot, check_path, step_world, update_visibility

from util import make_world, random_boxes, random_tree, survivors_oracle


# -- waypoint cache -----------------------------------------------------------------

def test_cache_store_counts():
    c = WaypointCache()
    c.store([(0, 0), (1, 1), (2, 2)], random.Random(0))
    assert c.count == 3
    c = WaypointCache()
    rng = random.Random(1)
    c.store([(i, i) for i in range(CACHE_SIZE)], rng)
    before = c.slots.copy()
    c.store([(-1, -1)], rng)
    assert c.count == CACHE_SIZE
    assert (before != c.slots).any(axis=1).sum() == 1


def test_cache_slots_come_from_stream():
    c = WaypointCache()
    rng = random.Random(2)
    stream = [(rng.random(), rng.random()) for _ in range(10 * CACHE_SIZE)]
    c.store(stream, rng)
    seen = set(stream)
    assert all(tuple(v) in seen for v in c.slots)


def test_choose_target_branches():
    w = make_world()
    c = WaypointCache()
    rng = random.Random(3)
    assert choose_target(c, (99, 99), w, rng, p=0.05) == (99, 99)
    x, y = choose_target(c, (99, 99), w, rng, p=0.5)  # empty cache falls through
    assert 0 <= x <= 100 and 0 <= y <= 100
    c.store([(1, 2)], rng)
    assert choose_target(c, (99, 99), w, rng, p=0.5) == (1.0, 2.0)
    x, y = choose_target(c, (99, 99), w, rng, p=0.9)
    assert 0 <= x <= 100 and 0 <= y <= 100


# -- trimming -----------------------------------------------------------------------

def test_trim_nothing_touched():
    t = Tree((0, 0))
    t.add((1, 1), 0)
    out = invalidate_and_trim(t, np.array([[50.0, 50, 60, 60]]), MetricsCounters())
    assert out.n == 2 and out.pts[: out.n].tolist() == t.pts[: t.n].tolist()


def test_trim_only_child_edge():
    t = Tree((0, 0))
    a = t.add((10, 0), 0)
    t.add((10, 10), a)
    out = invalidate_and_trim(t, np.array([[4.0, -1, 6, 1]]), MetricsCounters())
    assert out.n == 1 and tuple(out.pts[0]) == (0, 0)


def test_trim_matches_ancestor_oracle():
    rng = random.Random(4)
    for _ in range(200):
        t = random_tree(rng, rng.randint(1, 40))
        boxes = random_boxes(rng, rng.randint(0, 4), smax=15)
        out = invalidate_and_trim(t, boxes, MetricsCounters())
        keep = survivors_oracle(t, boxes)
        expect = sorted(map(tuple, t.pts[: t.n][np.array(keep)]))
        assert sorted(map(tuple, out.pts[: out.n])) == expect
        assert len(out.index) == out.n


def test_split_tree_pieces_are_disjoint():
    rng = random.Random(5)
    for _ in range(100):
        t = random_tree(rng, rng.randint(2, 40))
        killed = np.array([rng.random() < 0.2 for _ in range(t.n)])
        killed[0] = rng.random() < 0.3
        main, pieces = split_tree(t, killed)
        got = [tuple(p) for tr in ([main] if main else []) + pieces for p in tr.pts[: tr.n]]
        assert len(got) == len(set(got)) == int((~killed).sum())
        assert (main is None) == bool(killed[0])


# -- MP-RRT forest ------------------------------------------------------------------

def test_select_sample_branches():
    w = make_world()
    rng = random.Random(6)
    assert mprrt_select_sample([], (9, 9), w, rng, p=0.05).point == (9, 9)
    forest = [Tree((1, 1)), Tree((2, 2))]
    ch = mprrt_select_sample(forest, (9, 9), w, rng, p=0.15)
    assert ch.forest_index in (0, 1) and ch.point == tuple(forest[ch.forest_index].root_config)
    ch = mprrt_select_sample([], (9, 9), w, rng, p=0.15)
    assert ch.forest_index is None and 0 <= ch.point[0] <= 100


def severed_setup():
    w = make_world(robot=(0, 50), goal=(99, 50))
    s = MprrtPlanner(w, random.Random(7))
    t = Tree((0, 50))
    a = t.add((10, 50), 0)
    b = t.add((20, 50), a)
    prev = b
    for x in range(30, 90, 10):
        prev = t.add((x, 55), prev)
    s.ta = t
    s._seen = w
    return s, w


def test_prune_nothing_invalid():
    s, w = severed_setup()
    ta = s.ta
    prune_and_prepend(s, w, MetricsCounters(), changed=np.zeros((0, 4)))
    assert s.ta is ta and s.forest == []


def test_prune_severed_branch_of_six():
    s, w = severed_setup()
    prune_and_prepend(s, w, MetricsCounters(), changed=np.array([[14.0, 40, 16, 60]]))
    assert len(s.forest) == 1 and s.forest[0].n == 6
    assert s.ta.n == 2


def test_prune_evicts_oldest_at_capacity():
    s, w = severed_setup()
    old = []
    for k in range(FOREST_MAX):
        t = Tree((k, 0))
        for j in range(5):
            t.add((k, j + 1), j)
        old.append(t)
    s.forest = list(old)
    prune_and_prepend(s, w, MetricsCounters(), changed=np.array([[14.0, 40, 16, 60]]))
    assert len(s.forest) == FOREST_MAX
    assert old[0] not in s.forest and s.forest[:-1] == old[1:]


def test_splice_accounting():
    w = make_world(robot=(0, 0), goal=(99, 99))
    main = Tree((0, 0))
    sub = Tree((20, 0))
    for j in range(4):
        sub.add((20 + j, 5 + j), j)
    before = main.n
    r = connect(main, tuple(sub.root_config), w, MetricsCounters())
    assert tuple(main.pts[r.node]) == (20, 0)
    mid = main.n
    main.splice(sub, r.node)
    assert main.n == mid + sub.n - 1 == before + sub.n
    assert len(main.index) == main.n


# -- planners in motion -------------------------------------------------------------

def test_drrt_drops_and_regrows_when_path_cut():
    w = make_world(robot=(10, 50), goal=(90, 50))
    s = DrrtPlanner(w, random.Random(8))
    m = MetricsCounters()
    act = s.cycle(w, Budget("iterations", 300).start(), m)
    assert isinstance(act, Move)
    mid = s.path[len(s.path) // 2 - 1: len(s.path) // 2 + 1].mean(axis=0)
    w2 = make_world([(mid[0] - 2, mid[1] - 2, 4, 4)], robot=(10, 50), goal=(90, 50))
    act = s.cycle(w2, Budget("iterations", 300).start(), m)
    assert isinstance(act, Move)
    assert check_path(w2, s.path, m).feasible


class _Checked:
    """Mixin: assert every path handed to the planner is feasible when found."""

    def cycle(self, w, budget, m):
        self._w = w
        return super().cycle(w, budget, m)

    def _found(self, path):
        assert check_path(self._w, path, MetricsCounters()).feasible
        super()._found(path)


class CheckedDrrt(_Checked, DrrtPlanner):
    pass


class CheckedMprrt(_Checked, MprrtPlanner):
    pass


def drive(planner_cls, seed, ticks=300, adv=True, hook=None):
    spec = ScenarioSpec(bundled_map("desk.rects"))
    rng = random.Random(seed)
    w = build_world(spec, rng)
    p = planner_cls(w, rng, adv=adv)
    m = MetricsCounters()
    budget = Budget("iterations", 300)
    for _ in range(ticks):
        w = step_world(update_visibility(w), 0.1)
        act = p.cycle(w, budget.start(), m)
        if hook:
            hook(p, w, act)
        if isinstance(act, Move):
            w, rest = advance_robot(w, act.path, 0.1)
            p.on_moved(rest)
        if w.goal_reached:
            break
    return p


@pytest.mark.parametrize("cls", [CheckedDrrt, CheckedMprrt])
def test_paths_feasible_at_creation_100_runs(cls):
    for seed in range(100):
        drive(cls, seed, ticks=60)


def test_noadv_robot_stationary_while_disconnected():
    def hook(p, w, act):
        if p.path is None:
            assert isinstance(act, Wait)

    for cls in (DrrtPlanner, MprrtPlanner):
        for seed in range(10):
            drive(cls, seed, adv=False, hook=hook)


def test_forest_invariants_during_runs():
    def hook(p, w, act):
        assert len(p.forest) <= p.forest_max
        trees = [p.ta, p.tb] + p.forest
        for k, t in enumerate(trees):
            assert len(t.index) == t.n
            # node storage is never shared between trees
            assert not any(np.shares_memory(t.pts, u.pts) for u in trees[k + 1:])
        for t in p.forest:
            assert t.n >= p.min_save

    for seed in range(10):
        drive(MprrtPlanner, seed, hook=hook)


def test_drrt_static_empty_world_reaches_goal():
    r = run_trial(ScenarioSpec(bundled_map("empty.rects"), n_moving=0), "drrt-adv", 0)
    assert r.success
