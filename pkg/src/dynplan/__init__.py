"""Dynamic 2D path planning: RRT replanners, EP/N, hybrid planners and a
seeded benchmark harness over a discrete-time simulator."""
from .bench import TrialResult, aggregate, run_trial, run_trials, write_csv
from .common import ContractViolation, MetricsCounters
from .geometry import Point, Rect, Segment, point_in_rect, segment_intersects_rect, segment_rect_distance
from .maps import MapError, bundled_map, load_map
from .nn import LogForest
from .planners import PLANNERS, make_planner
from .scenario import ScenarioSpec, build_world
from .world import WorldState, advance_robot, check_path, eval_path, step_world, update_visibility

__all__ = [
    "ContractViolation", "LogForest", "MapError", "MetricsCounters", "PLANNERS", "Point", "Rect",
    "ScenarioSpec", "Segment", "TrialResult", "WorldState", "advance_robot", "aggregate",
    "build_world", "bundled_map", "check_path", "eval_path", "load_map", "make_planner",
    "point_in_rect", "run_trial", "run_trials", "segment_intersects_rect",
    "segment_rect_distance", "step_world", "update_visibility", "write_csv",
]
