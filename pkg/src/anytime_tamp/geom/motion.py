"""Trajectories, collision checking, RRT motion planning and battery accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .workspace import Pose, Workspace, WorkspaceError


class RegionUnsatisfiable(WorkspaceError):
    """No collision-free pose could be drawn from a region."""


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[Pose, ...]
    #: sampled anchor poses (the five inspection waypoints), if any
    anchors: tuple[Pose, ...] = ()

    @property
    def length(self) -> float:
        return sum(self.waypoints[i].distance(self.waypoints[i + 1]) for i in range(len(self.waypoints) - 1))

    @property
    def start(self) -> Pose:
        return self.waypoints[0]

    @property
    def end(self) -> Pose:
        return self.waypoints[-1]

    def then(self, other: "Trajectory") -> "Trajectory":
        """Concatenate; ``other`` must start where this one ends."""
        if other.waypoints[0] != self.waypoints[-1]:
            raise ValueError("trajectories do not connect")
        return Trajectory(self.waypoints + other.waypoints[1:], self.anchors + other.anchors)


@dataclass(frozen=True)
class BatteryModel:
    cost_per_meter: float = 1.0
    inspect_overhead: float = 5.0
    capacity: float = 400.0
    reserve: float = 60.0

    def __post_init__(self):
        if min(self.cost_per_meter, self.inspect_overhead, self.capacity, self.reserve) <= 0:
            raise ValueError("battery parameters must be positive")
        if self.reserve >= self.capacity:
            raise ValueError("reserve must be below capacity")


@dataclass(frozen=True)
class RRTConfig:
    step_fraction: float = 0.02
    goal_bias: float = 0.1
    max_iterations: int = 5000

    def step(self, w: Workspace) -> float:
        return self.step_fraction * w.diagonal

    def collision_step(self, w: Workspace) -> float:
        return self.step(w) / 4.0


def battery_cost(tr: Trajectory, model: BatteryModel, is_inspection: bool = False) -> float:
    return model.cost_per_meter * tr.length + (model.inspect_overhead if is_inspection else 0.0)


def collision_free(tr: Trajectory, w: Workspace) -> bool:
    """Exact point-robot check of every segment (the zero-step limit of densified sampling)."""
    pts = tr.waypoints
    if not all(w.in_bounds(p) for p in pts):
        return False
    if not w.pose_free(pts[0]):
        return False
    return all(w.segment_free(pts[i], pts[i + 1]) for i in range(len(pts) - 1))


def densified_free(tr: Trajectory, w: Workspace, eps: float) -> bool:
    """Check only the points sampled along the trajectory at spacing <= ``eps``."""
    free, _ = kernels.polyline_sampled_free(
        w.kernel, [float(p.x) for p in tr.waypoints], [float(p.y) for p in tr.waypoints], eps
    )
    return free and all(w.in_bounds(p) for p in tr.waypoints)


def _shortcut(points: list[Pose], w: Workspace, clock) -> list[Pose]:
    out = [points[0]]
    i = 0
    n = len(points)
    while i < n - 1:
        j = n - 1
        while j > i + 1:
            clock.tick()
            if w.segment_free(points[i], points[j]):
                break
            j -= 1
        out.append(points[j])
        i = j
    return out


class _NullClock:
    def tick(self, n: int = 1) -> None:
        pass


def plan_motion(
    p1: Pose,
    p2: Pose,
    w: Workspace,
    rng: np.random.Generator,
    max_iterations: int | None = None,
    config: RRTConfig = RRTConfig(),
    clock=None,
) -> Trajectory | None:
    """Single-tree RRT from ``p1`` to ``p2`` followed by greedy shortcutting.

    Returns ``None`` when the iteration cap is reached.
    """
    clock = clock or _NullClock()
    p1 = Pose(float(p1[0]), float(p1[1]))
    p2 = Pose(float(p2[0]), float(p2[1]))
    if p1 == p2:
        return Trajectory((p1,))
    clock.tick()
    if w.segment_free(p1, p2):
        return Trajectory((p1, p2))
    cap = config.max_iterations if max_iterations is None else max_iterations
    # one row of uniforms per iteration, drawn up front so both kernel
    # backends consume the stream identically
    samples = rng.random((cap, 3))
    x0, y0, x1, y1 = w.bounds
    xs, ys, iterations, queries = kernels.rrt_grow(
        w.kernel, x0, y0, x1, y1, p1.x, p1.y, p2.x, p2.y, config.step(w), config.goal_bias, samples
    )
    clock.tick(iterations + queries)
    if xs is None:
        return None
    path = [Pose(x, y) for x, y in zip(xs, ys)]
    return Trajectory(tuple(_shortcut(path, w, clock)))


def sample_pose_in_region(region_name: str, w: Workspace, rng: np.random.Generator, max_tries: int = 1000) -> Pose:
    """Uniform collision-free pose inside a named convex region (rejection sampling)."""
    if region_name not in w.regions:
        raise WorkspaceError(f"unknown region {region_name!r}")
    region = w.regions[region_name]
    if region.area < 1e-9:
        raise RegionUnsatisfiable(f"region {region_name!r} has no area")
    x0, y0, x1, y1 = region.bbox
    for _ in range(max_tries):
        p = Pose(x0 + rng.random() * (x1 - x0), y0 + rng.random() * (y1 - y0))
        if region.contains(p) and w.pose_free(p):
            return p
    raise RegionUnsatisfiable(f"no free pose found in region {region_name!r}")


def sample_inspection_waypoints(
    component_name: str, w: Workspace, rng: np.random.Generator, n: int = 5, max_tries: int = 2000
) -> tuple[Pose, ...]:
    """``n`` free poses drawn uniformly from the component's envelope, sorted along its major axis."""
    if component_name not in w.components:
        raise WorkspaceError(f"unknown component {component_name!r}")
    comp = w.components[component_name]
    L = comp.length
    ux, uy = (comp.b.x - comp.a.x) / L, (comp.b.y - comp.a.y) / L
    pts: list[Pose] = []
    tries = 0
    while len(pts) < n:
        if tries >= max_tries:
            raise RegionUnsatisfiable(f"envelope of {component_name!r} is blocked")
        tries += 1
        s = rng.random() * L
        t = (2.0 * rng.random() - 1.0) * comp.half_width
        p = Pose(comp.a.x + s * ux - t * uy, comp.a.y + s * uy + t * ux)
        if w.pose_free(p):
            pts.append(p)
    pts.sort(key=comp.axis_projection)
    return tuple(pts)


def connect_waypoints(
    points, w: Workspace, rng: np.random.Generator, config: RRTConfig = RRTConfig(), clock=None
) -> Trajectory | None:
    """Chain ``plan_motion`` through consecutive points; ``None`` if any leg fails."""
    tr = Trajectory((Pose(*points[0]),))
    for a, b in zip(points, points[1:]):
        leg = plan_motion(a, b, w, rng, config=config, clock=clock)
        if leg is None:
            return None
        tr = tr.then(leg)
    return tr


def inspection_trajectory(
    component_name: str, w: Workspace, rng: np.random.Generator, config: RRTConfig = RRTConfig(), clock=None
) -> Trajectory | None:
    """Five envelope waypoints ordered along the component axis, linked by motion plans.

    Raises :class:`RegionUnsatisfiable` when the envelope has no free space;
    returns ``None`` when a connecting motion plan fails.
    """
    anchors = sample_inspection_waypoints(component_name, w, rng)
    tr = connect_waypoints(anchors, w, rng, config, clock)
    if tr is None:
        return None
    return Trajectory(tr.waypoints, anchors)
