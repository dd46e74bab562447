"""Concrete layer: 2D workspace, collision checking, RRT and battery accounting."""

from .motion import (
    BatteryModel,
    RegionUnsatisfiable,
    RRTConfig,
    Trajectory,
    battery_cost,
    collision_free,
    connect_waypoints,
    densified_free,
    inspection_trajectory,
    plan_motion,
    sample_inspection_waypoints,
    sample_pose_in_region,
)
from .workspace import Component, Pose, Region, Workspace, WorkspaceError, load_workspace, parse_workspace

__all__ = [
    "BatteryModel",
    "Component",
    "Pose",
    "RRTConfig",
    "Region",
    "RegionUnsatisfiable",
    "Trajectory",
    "Workspace",
    "WorkspaceError",
    "battery_cost",
    "collision_free",
    "connect_waypoints",
    "densified_free",
    "inspection_trajectory",
    "load_workspace",
    "parse_workspace",
    "plan_motion",
    "sample_inspection_waypoints",
    "sample_pose_in_region",
]
