"""Vehicle plant model and pose estimator.

The plant is a quadrotor reduced to velocity commands with a first
order lag: commanded body-frame velocity is rotated to world, and the
actual velocity relaxes toward it with time constant tau. The
estimator is four independent scalar Kalman filters (x, y, z, yaw)
fed by dead-reckoned commands between vision pose measurements; when
vision drops out the prediction step keeps running and the variances
grow, which is the fallback behavior the mission relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .geometry import Pose, Vec3, rotate_world_to_body, wrap_angle


@dataclass(frozen=True)
class VehicleParams:
    """Plant and estimator tuning. All rates per second."""

    tau: float = 0.5
    q: float = 0.01
    yaw_loss_threshold: float = 0.5
    min_tracked_points: int = 15


@dataclass(frozen=True)
class ControlCommand:
    """Body-frame velocity command: vx right, vy forward, vz up, vyaw ccw."""

    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    vyaw: float = 0.0


@dataclass(frozen=True)
class VehicleState:
    """Ground-truth kinematic state."""

    pose: Pose
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw_rate: float = 0.0


@dataclass(frozen=True)
class EstimatorState:
    """Estimated pose with per-axis variances (x, y, z, yaw)."""

    pose_estimate: Pose
    variances: tuple[float, float, float, float]
    vision_available: bool = True


def _command_to_world(cmd: ControlCommand, yaw: float) -> tuple[float, float, float]:
    """Rotate the body-frame velocity command into the world frame."""
    wx, wy = rotate_world_to_body((cmd.vx, cmd.vy), -yaw)
    return (wx, wy, cmd.vz)


def step_dynamics(state: VehicleState, cmd: ControlCommand, dt: float, params: VehicleParams) -> VehicleState:
    """Advance ground truth by dt under a velocity command.

    First order lag toward the world-frame command:
        v' = v + (dt / tau) * (u_world - v)
    position integrates v', yaw integrates the equally lagged yaw rate.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if dt == 0:
        return state
    u = _command_to_world(cmd, state.pose.yaw)
    alpha = dt / params.tau
    v = tuple(vi + alpha * (ui - vi) for vi, ui in zip(state.velocity, u))
    yaw_rate = state.yaw_rate + alpha * (cmd.vyaw - state.yaw_rate)
    p = state.pose.position
    position = Vec3(p.x + v[0] * dt, p.y + v[1] * dt, p.z + v[2] * dt)
    yaw = wrap_angle(state.pose.yaw + yaw_rate * dt)
    return VehicleState(pose=Pose(position, yaw), velocity=v, yaw_rate=yaw_rate)


def predict(est: EstimatorState, cmd: ControlCommand, dt: float, params: VehicleParams) -> EstimatorState:
    """Dead-reckon the estimate forward by the commanded velocity.

    The pose estimate advances as if the command were tracked exactly;
    every axis variance grows by q * dt. This is the only motion model
    available during vision dropout.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if dt == 0:
        return est
    u = _command_to_world(cmd, est.pose_estimate.yaw)
    p = est.pose_estimate.position
    position = Vec3(p.x + u[0] * dt, p.y + u[1] * dt, p.z + u[2] * dt)
    yaw = wrap_angle(est.pose_estimate.yaw + cmd.vyaw * dt)
    grown = tuple(v + params.q * dt for v in est.variances)
    return replace(est, pose_estimate=Pose(position, yaw), variances=grown)


def update(est: EstimatorState, measured_pose: Pose, r: float) -> EstimatorState:
    """Fuse a vision pose measurement with per-axis scalar Kalman updates.

    Per axis: gain k = p / (p + r), estimate moves by k times the
    innovation (wrapped for yaw), variance shrinks to (1 - k) * p.
    Requires vision to be available; fusing without a measurement
    source is a wiring bug, not a recoverable state.
    """
    if r <= 0:
        raise ValueError(f"measurement variance must be > 0, got {r}")
    if not est.vision_available:
        raise ValueError("update called while vision is unavailable")
    p = est.pose_estimate.position
    m = measured_pose.position
    gains = [v / (v + r) for v in est.variances]
    position = Vec3(
        p.x + gains[0] * (m.x - p.x),
        p.y + gains[1] * (m.y - p.y),
        p.z + gains[2] * (m.z - p.z),
    )
    innovation = wrap_angle(measured_pose.yaw - est.pose_estimate.yaw)
    yaw = wrap_angle(est.pose_estimate.yaw + gains[3] * innovation)
    variances = tuple((1.0 - k) * v for k, v in zip(gains, est.variances))
    return replace(est, pose_estimate=Pose(position, yaw), variances=variances)


def vision_gate(state: VehicleState, visible_count: int, params: VehicleParams) -> bool:
    """Decide whether the vision pose source is usable this tick.

    Tracking survives only when the vehicle is not spinning fast and
    enough map points are in view.
    """
    return (
        abs(state.yaw_rate) <= params.yaw_loss_threshold
        and visible_count >= params.min_tracked_points
    )
