import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynplan.common import ContractViolation, MetricsCounters
from dynplan.world import (Kind, advance_robot, changed_boxes, check_path, eval_path, first_hit,
                           step_world, update_visibility)

from util import brute_mu, make_world, random_boxes, world_from_boxes


def test_straight_path_in_empty_world():
    w = make_world()
    r = check_path(w, [(0, 0), (10, 0)], MetricsCounters())
    assert r.feasible and r.total_intersections == 0 and r.eta == 0.0


def test_two_box_crossing_report():
    w = make_world([(2, -1, 1, 2), (6, -1, 1, 2)], bounds=(-10, -10, 30, 30), robot=(0, 0), goal=(10, 0))
    m = MetricsCounters()
    r = check_path(w, [(0, 0), (10, 0)], m)
    assert not r.feasible
    assert r.first_collision_vertex == 0
    assert r.total_intersections == 2
    assert r.unfeasible_segments == 1
    assert r.eta == 2.0
    assert r.blocking_obstacle == 0
    assert m.collision_checks == 1


def test_check_path_matches_brute_force_small():
    rng = random.Random(11)
    for _ in range(500):
        boxes = random_boxes(rng, rng.randint(0, 8))
        w = world_from_boxes(boxes)
        P = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(6)]
        r = check_path(w, P, MetricsCounters())
        per = brute_mu(P, boxes)
        assert r.total_intersections == sum(per)
        assert r.feasible == (sum(per) == 0)
        assert r.unfeasible_segments == sum(1 for c in per if c)
        if not r.feasible:
            assert r.eta * r.unfeasible_segments == r.total_intersections
            assert r.first_collision_vertex == next(i for i, c in enumerate(per) if c)


def test_check_path_ignores_hidden():
    w = make_world(hidden=[(4, -1, 2, 2)], bounds=(-10, -10, 30, 30), robot=(0, 0), goal=(10, 0))
    assert check_path(w, [(0, 0), (10, 0)], MetricsCounters()).feasible


def test_first_hit_reports_nearest_obstacle_id():
    w = make_world([(6, -1, 1, 2), (2, -1, 1, 2)], bounds=(-10, -10, 30, 30), robot=(0, 0), goal=(10, 0))
    m = MetricsCounters()
    t, oid = first_hit(w, (0, 0), (10, 0), m)
    assert oid == 1 and t == pytest.approx(0.2)
    assert m.collision_checks == 1


def test_feasibility_monotone_under_removal():
    rng = random.Random(12)
    for _ in range(200):
        boxes = random_boxes(rng, rng.randint(1, 8))
        P = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(4)]
        if check_path(world_from_boxes(boxes), P, MetricsCounters()).feasible:
            fewer = np.delete(boxes, rng.randrange(len(boxes)), axis=0)
            assert check_path(world_from_boxes(fewer), P, MetricsCounters()).feasible


def test_eval_path_examples_and_oracle():
    assert eval_path([(0, 0), (3, 4), (3, 9)]) == 10.0
    assert eval_path([(1, 1), (1, 1), (4, 5)]) == 5.0
    rng = random.Random(13)
    for _ in range(100):
        P = [(rng.uniform(-50, 50), rng.uniform(-50, 50)) for _ in range(rng.randint(2, 12))]
        total = 0.0
        for a, b in zip(P, P[1:]):
            total += math.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2)
        assert eval_path(P) == pytest.approx(total, abs=1e-9)


def test_step_world_translation_and_bounce():
    w = make_world(moving=[(10, 10, 2, 2, 5, 0)])
    w2 = step_world(w, 1.0)
    assert tuple(w2.boxes[0]) == (15, 10, 17, 12)
    assert w2.sim_time == 1.0
    edge = make_world(moving=[(97, 10, 2, 2, 4, 0)])
    e2 = step_world(edge, 1.0)
    assert tuple(e2.velocity[0]) == (-4.0, 0.0)
    assert tuple(e2.boxes[0]) == (93, 10, 95, 12)


def test_step_world_bounces_off_static():
    w = make_world([(20, 0, 5, 100)], moving=[(17, 50, 2, 2, 3, 0)])
    w2 = step_world(w, 1.0)
    assert w2.velocity[1, 0] == -3.0
    assert tuple(w2.boxes[1]) == (14, 50, 16, 52)


def test_step_world_requires_positive_dt():
    with pytest.raises(ContractViolation):
        step_world(make_world(), 0.0)


def test_step_world_deterministic_and_in_bounds():
    rng = random.Random(14)
    moving = []
    for _ in range(30):
        x, y = rng.uniform(0, 96), rng.uniform(0, 96)
        moving.append((x, y, 4, 4, rng.uniform(-15, 15), rng.uniform(-15, 15)))
    w = make_world(moving=moving)
    a = b = w
    for _ in range(1000):
        a = step_world(a, 0.1)
        b = step_world(b, 0.1)
        B = a.boxes
        assert (B[:, 0] >= 0).all() and (B[:, 2] <= 100).all()
        assert (B[:, 1] >= 0).all() and (B[:, 3] <= 100).all()
    assert np.array_equal(a.boxes, b.boxes) and np.array_equal(a.velocity, b.velocity)


def test_visibility_radius():
    far = make_world(hidden=[(50, 50, 2, 2)], robot=(0, 0), sensor_radius=30.0)
    assert not update_visibility(far).visible[0]
    near = make_world(hidden=[(29, 0, 2, 2)], robot=(0, 0), sensor_radius=30.0)
    assert update_visibility(near).visible[0]


def test_unknown_map_sweep_reveals_each_once():
    hidden = [(x, 40, 4, 4) for x in range(5, 95, 10)]
    w = make_world(hidden=hidden, robot=(0, 50), goal=(100, 50), speed=10.0, sensor_radius=15.0)
    reveals = np.zeros(len(hidden), int)
    path = np.array([(0, 50), (100, 50)], float)
    while not w.goal_reached:
        before = w.visible.copy()
        w = update_visibility(w)
        reveals += w.visible & ~before
        assert (w.visible | ~before).all()  # never hidden again
        w, path = advance_robot(w, path, 0.1)
    w = update_visibility(w)
    assert w.visible.all()
    assert (reveals == 1).all()


def test_advance_examples():
    w = make_world(robot=(0, 0), goal=(10, 0), speed=5.0, bounds=(-10, -10, 30, 30))
    w2, rest = advance_robot(w, [(0, 0), (10, 0)], 1.0)
    assert tuple(w2.robot_pos) == (5.0, 0.0)
    assert np.array_equal(rest, [[5, 0], [10, 0]])
    w3, rest = advance_robot(w, [(0, 0), (2, 0), (2, 10)], 1.0)
    assert tuple(w3.robot_pos) == (2.0, 3.0)
    assert np.array_equal(rest[0], [2.0, 3.0])


def test_advance_requires_path_at_robot():
    w = make_world(robot=(0, 0))
    with pytest.raises(ContractViolation):
        advance_robot(w, [(1, 0), (2, 0)], 0.1)


def test_arrival_time_matches_kinematics():
    rng = random.Random(15)
    for _ in range(20):
        P = [(1.0, 1.0)] + [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(4)]
        w = make_world(robot=P[0], goal=P[-1], speed=10.0)
        dt = 0.1
        path = np.array(P)
        t = 0.0
        while not np.array_equal(np.asarray(w.robot_pos), path[-1]) or len(path) > 2 or t == 0.0:
            w, path = advance_robot(w, path, dt)
            t += dt
            if np.array_equal(path[0], path[-1]):
                break
        assert t == pytest.approx(eval_path(P) / 10.0, abs=dt + 1e-9)
        assert tuple(w.robot_pos) == P[-1]


def test_changed_boxes_tracks_moves_and_reveals():
    w = make_world([(50, 50, 5, 5)], moving=[(10, 10, 2, 2, 1, 0)], hidden=[(3, 3, 2, 2)], robot=(0, 0),
                   sensor_radius=5.0)
    w2 = update_visibility(step_world(w, 0.1))
    ch = changed_boxes(w, w2)
    assert len(ch) == 2  # the mover and the newly visible box, not the static one
    assert changed_boxes(w2, w2).shape[0] == 0
    assert changed_boxes(None, w2).shape[0] == 3


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 90), st.integers(0, 90), st.integers(1, 10), st.integers(1, 10)),
                max_size=6),
       st.lists(st.tuples(st.integers(0, 100), st.integers(0, 100)), min_size=2, max_size=6))
def test_eta_times_segments_is_mu(rects, path):
    w = make_world(rects)
    r = check_path(w, path, MetricsCounters())
    assert r.eta * r.unfeasible_segments == r.total_intersections
    assert r.feasible == (r.total_intersections == 0)
    assert len(r.segment_hits) == len(path) - 1


def test_kinds_are_consistent():
    w = make_world([(1, 1, 1, 1)], moving=[(5, 5, 1, 1, 1, 1)], hidden=[(9, 9, 1, 1)])
    assert list(w.kind) == [Kind.STATIC, Kind.MOVING, Kind.HIDDEN]
    assert list(w.visible) == [True, True, False]
