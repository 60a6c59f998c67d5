"""Proportional waypoint controller.

Position error is computed in the world frame, rotated into the body
frame by the vehicle's yaw, and scaled elementwise by per-axis gains.
Commands are clamped per axis; the yaw clamp is deliberately tight
because the vision front end cannot track through fast rotation. The
integral and derivative terms exist as fields but are pinned to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose, rotate_world_to_body, wrap_angle
from .planner import Waypoint
from .vehicle import ControlCommand


@dataclass(frozen=True)
class Gains:
    """Per-axis proportional gains. ki and kd are retained but fixed at 0."""

    kx: float = 0.5
    ky: float = 0.5
    kz: float = 0.6
    kyaw: float = 0.4
    ki: float = 0.0
    kd: float = 0.0

    def __post_init__(self):
        if min(self.kx, self.ky, self.kz, self.kyaw) < 0:
            raise ValueError("gains must be >= 0")
        if self.ki != 0.0 or self.kd != 0.0:
            raise ValueError("integral and derivative gains are fixed at 0")


@dataclass(frozen=True)
class Clamps:
    """Per-axis command magnitude limits."""

    vx: float = 1.0
    vy: float = 1.0
    vz: float = 0.7
    vyaw: float = 0.3

    def __post_init__(self):
        if min(self.vx, self.vy, self.vz, self.vyaw) <= 0:
            raise ValueError("clamp bounds must be > 0")


@dataclass(frozen=True)
class Tolerances:
    pos_tol: float = 0.25
    yaw_tol: float = 0.1

    def __post_init__(self):
        if self.pos_tol <= 0 or self.yaw_tol <= 0:
            raise ValueError("tolerances must be > 0")


def _clip(value: float, bound: float) -> float:
    return max(-bound, min(bound, value))


def clamp(cmd: ControlCommand, bounds: Clamps) -> ControlCommand:
    """Limit each command component to [-bound, +bound]."""
    return ControlCommand(
        vx=_clip(cmd.vx, bounds.vx),
        vy=_clip(cmd.vy, bounds.vy),
        vz=_clip(cmd.vz, bounds.vz),
        vyaw=_clip(cmd.vyaw, bounds.vyaw),
    )


def control_step(
    waypoint: Waypoint, est_pose: Pose, gains: Gains, clamps: Clamps
) -> ControlCommand:
    """One proportional control tick toward a waypoint.

    The world-frame position error is rotated into the body frame by
    the estimated yaw, so the command is meaningful to the vehicle
    regardless of its heading. Yaw error is wrapped before scaling.
    """
    wp = waypoint.pose.position
    p = est_pose.position
    ex, ey = rotate_world_to_body((wp.x - p.x, wp.y - p.y), est_pose.yaw)
    ez = wp.z - p.z
    eyaw = wrap_angle(waypoint.pose.yaw - est_pose.yaw)
    raw = ControlCommand(
        vx=gains.kx * ex,
        vy=gains.ky * ey,
        vz=gains.kz * ez,
        vyaw=gains.kyaw * eyaw,
    )
    return clamp(raw, clamps)


def waypoint_reached(waypoint: Waypoint, est_pose: Pose, tol: Tolerances) -> bool:
    """True when both position and wrapped yaw error are inside tolerance.

    Both comparisons are strict, so an error exactly at tolerance does
    not count as reached.
    """
    wp = waypoint.pose.position
    p = est_pose.position
    dist = math.sqrt((wp.x - p.x) ** 2 + (wp.y - p.y) ** 2 + (wp.z - p.z) ** 2)
    yaw_err = abs(wrap_angle(waypoint.pose.yaw - est_pose.yaw))
    return dist < tol.pos_tol and yaw_err < tol.yaw_tol
