"""Circular orbit planning around a detected target.

The orbit is a horizontal circle through the vehicle's current
position, centered on the target, flown at the current altitude.
Waypoint 0 sits at the vehicle's current angular position, the rest
follow at uniform angular increments, and every waypoint yaw faces
the circle center so the camera keeps the target in frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateOrbit
from .geometry import Pose, Vec3, wrap_angle

CCW = 1
CW = -1


@dataclass(frozen=True)
class Waypoint:
    index: int
    pose: Pose
    angle_on_circle: float


@dataclass(frozen=True)
class OrbitPlan:
    center: Vec3
    radius: float
    waypoints: tuple[Waypoint, ...]
    direction: int


def n_from_spacing(radius: float, spacing: float = 1.5) -> int:
    """Waypoint count giving roughly the requested arc length per hop."""
    return max(2, round(2.0 * math.pi * radius / spacing))


def plan_orbit(
    target: Vec3,
    drone_pose: Pose,
    n: int,
    direction: int = CCW,
    min_radius: float = 0.5,
) -> OrbitPlan:
    """Plan an n-waypoint circle around the target.

    Radius is the horizontal distance from the vehicle to the target;
    altitude is frozen at the vehicle's current z. Waypoints are laid
    out from the vehicle's current bearing in uniform 2*pi/n steps in
    the chosen direction (CCW or CW), each yawed to face the center.

    Raises DegenerateOrbit when the horizontal radius is below
    min_radius; directly above the target there is no circle to fly.
    """
    if n < 2:
        raise ValueError(f"orbit needs at least 2 waypoints, got {n}")
    if direction not in (CCW, CW):
        raise ValueError(f"direction must be {CCW} (ccw) or {CW} (cw)")

    dx = drone_pose.position.x - target.x
    dy = drone_pose.position.y - target.y
    radius = math.hypot(dx, dy)
    if radius < min_radius:
        raise DegenerateOrbit(
            f"horizontal radius {radius:.3f} m below minimum {min_radius} m"
        )

    altitude = drone_pose.position.z
    start_angle = math.atan2(dy, dx)
    step = direction * 2.0 * math.pi / n
    waypoints = []
    for i in range(n):
        angle = wrap_angle(start_angle + i * step)
        x = target.x + radius * math.cos(angle)
        y = target.y + radius * math.sin(angle)
        # Facing the center means the forward axis (-sin yaw, cos yaw)
        # equals -(cos angle, sin angle), which is yaw = angle + pi/2.
        yaw = wrap_angle(angle + math.pi / 2.0)
        waypoints.append(
            Waypoint(index=i, pose=Pose(Vec3(x, y, altitude), yaw), angle_on_circle=angle)
        )
    center = Vec3(target.x, target.y, altitude)
    return OrbitPlan(center=center, radius=radius, waypoints=tuple(waypoints), direction=direction)


def next_waypoint(plan: OrbitPlan, current_index: int) -> Waypoint | None:
    """Waypoint after current_index, or None when the orbit is complete."""
    if not (0 <= current_index <= len(plan.waypoints)):
        raise ValueError(f"waypoint index {current_index} outside 0..{len(plan.waypoints)}")
    if current_index + 1 >= len(plan.waypoints):
        return None
    return plan.waypoints[current_index + 1]
