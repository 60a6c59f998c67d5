"""Frames, angles, camera model, and triangulation primitives.

Conventions used throughout the package:

* World frame: right handed, z up, distances in meters.
* Yaw: rotation about +z, counterclockwise positive, stored in (-pi, pi].
* A vehicle at yaw 0 faces +y. Its camera looks along the body +y axis,
  so in world coordinates
      forward = (-sin(yaw), cos(yaw), 0)
      right   = ( cos(yaw), sin(yaw), 0)
      up      = (0, 0, 1)
* Normalized image coordinates (x, y): x is positive to the right,
  y is positive DOWN (image rows grow downward), both divided by depth
  along the forward axis.
* The body-frame rotation R_z(t) = [[cos t, sin t], [-sin t, cos t]]
  maps a world-frame displacement into the frame of a vehicle yawed
  by +t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, InsufficientViews, NonConvergent

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Reduce an angle to the interval (-pi, pi].

    The result is congruent to ``a`` modulo 2*pi. The boundary belongs
    to +pi: wrap_angle(-pi) == wrap_angle(pi) == pi.
    """
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def rotate_world_to_body(v: tuple[float, float], theta: float) -> tuple[float, float]:
    """Rotate a world-frame (x, y) displacement into the body frame.

    Applies [[cos, sin], [-sin, cos]] as a column-vector product. The
    inverse is rotate_world_to_body(v, -theta).
    """
    c = math.cos(theta)
    s = math.sin(theta)
    x, y = v
    return (c * x + s * y, -s * x + c * y)


@dataclass(frozen=True)
class Vec3:
    """A world-frame point or displacement in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite Vec3 components ({self.x}, {self.y}, {self.z})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Pose:
    """Position plus yaw. Yaw is wrapped to (-pi, pi] on construction."""

    position: Vec3
    yaw: float

    def __post_init__(self):
        if not math.isfinite(self.yaw):
            raise ValueError(f"non-finite yaw {self.yaw}")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics with a two-coefficient radial distortion model."""

    fx: float
    fy: float
    cx: float
    cy: float
    k1: float
    k2: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class Observation:
    """One detected world point in one image: identity plus distorted pixel."""

    point_id: int
    pixel: tuple[float, float]


def camera_axes(yaw: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return the (forward, right, up) world-frame unit axes at a yaw."""
    s = math.sin(yaw)
    c = math.cos(yaw)
    forward = np.array([-s, c, 0.0])
    right = np.array([c, s, 0.0])
    up = np.array([0.0, 0.0, 1.0])
    return forward, right, up


def project_normalized(pose: Pose, point: Vec3) -> tuple[float, float, float]:
    """Project a world point into normalized image coordinates.

    Returns (x, y, depth) with image y positive down. Depth is the
    component along the camera forward axis; callers must treat
    depth <= 0 as not visible before using x and y.
    """
    forward, right, up = camera_axes(pose.yaw)
    q = point.as_array() - pose.position.as_array()
    depth = float(q @ forward)
    if depth <= 0.0:
        return 0.0, 0.0, depth
    xn = float(q @ right) / depth
    yn = -float(q @ up) / depth
    return xn, yn, depth


def ray_direction(pose: Pose, xn: float, yn: float) -> np.ndarray:
    """Unit world-frame ray through a normalized image point."""
    forward, right, up = camera_axes(pose.yaw)
    d = forward + xn * right - yn * up
    return d / np.linalg.norm(d)


def distort_pixel(p_normalized: tuple[float, float], cam: CameraIntrinsics) -> tuple[float, float]:
    """Apply radial distortion and intrinsics to a normalized point.

    With r^2 = x^2 + y^2 and s = 1 + k1*r^2 + k2*r^4:
        u = fx * s * x + cx
        v = fy * s * y + cy
    """
    x, y = p_normalized
    r2 = x * x + y * y
    s = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2
    return (cam.fx * s * x + cam.cx, cam.fy * s * y + cam.cy)


def undistort_pixel(
    pix: tuple[float, float],
    cam: CameraIntrinsics,
    max_iters: int = 1000,
    tol: float = 1e-9,
) -> tuple[float, float]:
    """Invert distort_pixel, returning normalized coordinates.

    Fixed-point iteration on x <- p / s(|x|): the distorted normalized
    point p is divided by the scale evaluated at the current estimate.
    Convergence is declared when |s(x)*x - p| < tol in normalized
    units, which bounds the pixel round-trip error by max(fx, fy)*tol.

    Raises NonConvergent if the tolerance is not met within max_iters,
    which signals distortion outside the supported range.
    """
    px = (pix[0] - cam.cx) / cam.fx
    py = (pix[1] - cam.cy) / cam.fy
    x, y = px, py
    for _ in range(max_iters):
        r2 = x * x + y * y
        s = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2
        if abs(s * x - px) < tol and abs(s * y - py) < tol:
            return (x, y)
        if s <= 0.0 or not math.isfinite(s):
            raise NonConvergent(f"distortion scale collapsed at r2={r2:.3g}")
        x = px / s
        y = py / s
    raise NonConvergent(f"undistortion did not reach {tol} in {max_iters} iterations")


# Rays whose directions span less than this fraction of the dominant
# eigenvalue of the design system carry no depth information.
_CONDITION_RATIO = 1e-8
_MIN_CENTER_SPREAD = 1e-6


def triangulate_point(observations: list[tuple[Pose, tuple[float, float]]]) -> Vec3:
    """Recover a 3D point from two or more posed normalized observations.

    Each observation is (camera pose, undistorted normalized (x, y)).
    Two views use the midpoint of the common perpendicular between the
    rays; more views minimize the sum of squared point-to-ray distances
    through the normal equations sum(I - d d^T) P = sum(I - d d^T) C.

    Raises InsufficientViews for fewer than two observations and
    DegenerateGeometry when the camera centers coincide or the rays are
    near parallel.
    """
    if len(observations) < 2:
        raise InsufficientViews(f"triangulation needs >= 2 views, got {len(observations)}")

    centers = np.array([pose.position.as_array() for pose, _ in observations])
    dirs = np.array([ray_direction(pose, xn, yn) for pose, (xn, yn) in observations])

    spread = float(np.max(np.linalg.norm(centers - centers.mean(axis=0), axis=1)))
    if spread < _MIN_CENTER_SPREAD:
        raise DegenerateGeometry(f"camera centers within {spread:.3g} m, no parallax")

    eye = np.eye(3)
    a = np.zeros((3, 3))
    b = np.zeros(3)
    for c, d in zip(centers, dirs):
        proj = eye - np.outer(d, d)
        a += proj
        b += proj @ c

    evals = np.linalg.eigvalsh(a)
    if evals[0] < _CONDITION_RATIO * evals[-1]:
        raise DegenerateGeometry(
            f"near-parallel rays, eigenvalue ratio {evals[0] / evals[-1]:.3g}"
        )

    if len(observations) == 2:
        # Closest points on the two rays, then their midpoint.
        d1, d2 = dirs
        w = centers[1] - centers[0]
        dot = float(d1 @ d2)
        denom = 1.0 - dot * dot
        t1 = (float(d1 @ w) - dot * float(d2 @ w)) / denom
        t2 = (dot * float(d1 @ w) - float(d2 @ w)) / denom
        p = 0.5 * (centers[0] + t1 * d1 + centers[1] + t2 * d2)
        return Vec3.from_array(p)

    return Vec3.from_array(np.linalg.solve(a, b))
