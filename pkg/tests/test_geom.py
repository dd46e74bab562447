from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from anytime_tamp.geom import (
    BatteryModel,
    Pose,
    RegionUnsatisfiable,
    RRTConfig,
    Trajectory,
    WorkspaceError,
    battery_cost,
    collision_free,
    densified_free,
    inspection_trajectory,
    parse_workspace,
    plan_motion,
    sample_inspection_waypoints,
    sample_pose_in_region,
)
from oracles import dense_polyline_free, point_in_polygon

BOX = """
bounds 0 0 10 10
obstacle block rect 4 4 6 6
region A rect 0 0 2 2
region B rect 8 8 10 10
component C 1 5 3 5 1
"""


@pytest.fixture(scope="module")
def box():
    return parse_workspace(BOX)


def test_segment_through_obstacle(box):
    assert not collision_free(Trajectory((Pose(1, 5), Pose(9, 5))), box)
    assert collision_free(Trajectory((Pose(1, 1), Pose(9, 1))), box)


def test_zero_length_trajectory(box):
    assert collision_free(Trajectory((Pose(1, 1),)), box)
    assert collision_free(Trajectory((Pose(1, 1), Pose(1, 1))), box)
    assert not collision_free(Trajectory((Pose(5, 5),)), box)


def test_out_of_bounds_is_not_free(box):
    assert not collision_free(Trajectory((Pose(1, 1), Pose(11, 1))), box)


def test_random_trajectories_agree_with_dense_oracle(hangar_workspace):
    w = hangar_workspace
    eps = RRTConfig().collision_step(w)
    rng = np.random.default_rng(2024)
    polys = list(w.obstacles.values())
    x0, y0, x1, y1 = w.bounds
    disagreements = 0
    free_count = 0
    for _ in range(200):
        k = int(rng.integers(2, 5))
        pts = [Pose(x0 + rng.random() * (x1 - x0), y0 + rng.random() * (y1 - y0)) for _ in range(k)]
        exact = collision_free(Trajectory(tuple(pts)), w)
        oracle = dense_polyline_free(pts, polys, eps / 10)
        disagreements += exact != oracle
        free_count += exact
    assert disagreements == 0
    assert 0 < free_count < 200


def test_sampled_check_at_epsilon_is_weaker_than_exact(box):
    # clips the obstacle corner by less than the sampling step
    tr = Trajectory((Pose(2.1, 5.95), Pose(5.95, 2.1)))
    assert not collision_free(tr, box)
    assert densified_free(tr, box, 0.5)
    assert not densified_free(tr, box, 0.01)
    assert densified_free(Trajectory((Pose(1, 1), Pose(9, 1))), box, 0.1)


def test_plan_motion_same_pose(box):
    tr = plan_motion(Pose(1, 1), Pose(1, 1), box, np.random.default_rng(0))
    assert tr.waypoints == (Pose(1, 1),) and tr.length == 0


def test_plan_motion_empty_workspace_near_straight_line():
    w = parse_workspace("bounds 0 0 10 10\n")
    tr = plan_motion(Pose(1, 1), Pose(9, 7), w, np.random.default_rng(0))
    d = math.hypot(8, 6)
    assert d - 1e-9 <= tr.length <= 1.05 * d


def test_plan_motion_around_obstacle(box):
    rng = np.random.default_rng(5)
    tr = plan_motion(Pose(1, 5), Pose(9, 5), box, rng)
    assert tr is not None
    assert tr.start == Pose(1, 5) and tr.end == Pose(9, 5)
    assert collision_free(tr, box)
    assert tr.length >= 8
    assert abs(tr.length - sum(math.dist(a, b) for a, b in zip(tr.waypoints, tr.waypoints[1:]))) < 1e-9


def test_plan_motion_wall_fails_at_cap():
    w = parse_workspace("bounds 0 0 10 10\nobstacle wall rect 4.9 0 5.1 10\n")
    assert plan_motion(Pose(1, 5), Pose(9, 5), w, np.random.default_rng(0), max_iterations=300) is None


def test_plan_motion_deterministic(hangar_workspace):
    def run():
        return plan_motion(Pose(4, 4), Pose(22, 8), hangar_workspace, np.random.default_rng(11))

    a, b = run(), run()
    assert a == b and a is not None
    assert collision_free(a, hangar_workspace)
    assert densified_free(a, hangar_workspace, RRTConfig().collision_step(hangar_workspace))


@pytest.mark.parametrize("seed", range(8))
def test_plan_motion_results_collision_free(hangar_workspace, seed):
    rng = np.random.default_rng(seed)
    a = sample_pose_in_region("Dock", hangar_workspace, rng)
    b = sample_pose_in_region("LeftWingNear", hangar_workspace, rng)
    tr = plan_motion(a, b, hangar_workspace, rng)
    assert tr is not None and collision_free(tr, hangar_workspace)
    assert dense_polyline_free(tr.waypoints, list(hangar_workspace.obstacles.values()), 0.01)


def test_region_samples_uniform(box):
    rng = np.random.default_rng(99)
    pts = np.array([sample_pose_in_region("A", box, rng) for _ in range(10_000)])
    counts, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=4, range=[[0, 2], [0, 2]])
    assert counts.sum() == 10_000
    assert chisquare(counts.ravel()).pvalue > 0.01


def test_region_samples_are_free_and_inside(hangar_workspace):
    rng = np.random.default_rng(1)
    polys = list(hangar_workspace.obstacles.values())
    region = hangar_workspace.regions["RightNacelleNear"]
    for _ in range(200):
        p = sample_pose_in_region("RightNacelleNear", hangar_workspace, rng)
        assert region.contains(p)
        assert not any(point_in_polygon(p.x, p.y, poly) for poly in polys)


def test_degenerate_region():
    w = parse_workspace("bounds 0 0 10 10\nregion thin rect 1 1 5 1.0000000001\n")
    with pytest.raises(RegionUnsatisfiable):
        sample_pose_in_region("thin", w, np.random.default_rng(0))


def test_region_sampling_deterministic(box):
    def draw():
        rng = np.random.default_rng(3)
        return [sample_pose_in_region("B", box, rng) for _ in range(20)]

    assert draw() == draw()
    with pytest.raises(WorkspaceError):
        sample_pose_in_region("Nowhere", box, np.random.default_rng(3))


def test_inspection_trajectory_left_wing(hangar_workspace):
    comp = hangar_workspace.components["LeftWing"]
    tr = inspection_trajectory("LeftWing", hangar_workspace, np.random.default_rng(4))
    assert tr is not None and len(tr.anchors) == 5
    proj = [comp.axis_projection(p) for p in tr.anchors]
    assert proj == sorted(proj)
    assert all(a in tr.waypoints for a in tr.anchors)
    assert collision_free(tr, hangar_workspace)


def test_inspection_two_seeds_differ(hangar_workspace):
    comp = hangar_workspace.components["RightNacelle"]
    a = sample_inspection_waypoints("RightNacelle", hangar_workspace, np.random.default_rng(1))
    b = sample_inspection_waypoints("RightNacelle", hangar_workspace, np.random.default_rng(2))
    assert a != b
    for pts in (a, b):
        proj = [comp.axis_projection(p) for p in pts]
        assert proj == sorted(proj)


def test_inspection_envelope_blocked():
    w = parse_workspace("bounds 0 0 10 10\nobstacle slab rect 0 3 10 7\ncomponent C 2 5 8 5 1\n")
    with pytest.raises(RegionUnsatisfiable):
        inspection_trajectory("C", w, np.random.default_rng(0))


def test_battery_cost_examples():
    m = BatteryModel(cost_per_meter=0.5)
    assert battery_cost(Trajectory((Pose(0, 0),)), m) == 0
    assert battery_cost(Trajectory((Pose(0, 0), Pose(10, 0))), m) == 5.0
    assert battery_cost(Trajectory((Pose(0, 0), Pose(10, 0))), m, is_inspection=True) == 5.0 + m.inspect_overhead


@given(
    st.lists(st.tuples(st.floats(0, 50), st.floats(0, 50)), min_size=1, max_size=6),
    st.lists(st.tuples(st.floats(0, 50), st.floats(0, 50)), min_size=1, max_size=6),
    st.floats(0.01, 10),
)
@settings(max_examples=100)
def test_battery_cost_additive(p1, p2, rate):
    m = BatteryModel(cost_per_meter=rate)
    t1 = Trajectory(tuple(Pose(*p) for p in p1))
    t2 = Trajectory((t1.end,) + tuple(Pose(*p) for p in p2))
    assert battery_cost(t1.then(t2), m) == pytest.approx(battery_cost(t1, m) + battery_cost(t2, m), rel=1e-9, abs=1e-9)


@given(st.lists(st.tuples(st.floats(0, 50), st.floats(0, 50)), min_size=2, max_size=6), st.floats(0.1, 10))
@settings(max_examples=100)
def test_battery_cost_homogeneous(pts, k):
    m = BatteryModel()
    t = Trajectory(tuple(Pose(*p) for p in pts))
    scaled = Trajectory(tuple(Pose(k * x, k * y) for x, y in pts))
    assert battery_cost(scaled, m) == pytest.approx(k * battery_cost(t, m), rel=1e-9, abs=1e-9)


def test_battery_model_validation():
    with pytest.raises(ValueError):
        BatteryModel(cost_per_meter=0)
    with pytest.raises(ValueError):
        BatteryModel(capacity=50, reserve=60)


def test_then_requires_connection():
    with pytest.raises(ValueError):
        Trajectory((Pose(0, 0), Pose(1, 0))).then(Trajectory((Pose(2, 0), Pose(3, 0))))


@pytest.mark.parametrize(
    "text",
    [
        "obstacle a rect 0 0 1 1\n",
        "bounds 0 0 10\n",
        "bounds 0 0 10 10\nobstacle a rect 0 0 x 1\n",
        "bounds 0 0 10 10\nregion r polygon 0 0 4 0 1 1 0 4\n",
        "bounds 0 0 10 10\nregion r rect 8 8 12 12\n",
        "bounds 0 0 10 10\nobstacle o rect 1 1 2 2\nregion r rect 0 0 5 5\n",
        "bounds 0 0 10 10\ndock Nowhere\n",
        "bounds 0 0 10 10\nteleporter t 1 1\n",
        "bounds 0 0 10 10\nregion r rect 0 0 1 1\nregion r rect 2 2 3 3\n",
        "bounds 0 0 10 10\nobstacle c circle 5 5 1\n",
    ],
)
def test_workspace_parse_errors(text):
    with pytest.raises(WorkspaceError):
        parse_workspace(text)


def test_hangar_workspace_loads(hangar_workspace):
    assert hangar_workspace.docks == ("Dock",)
    assert hangar_workspace.regions["Dock"].area == 16
    assert len(hangar_workspace.components) == 5
