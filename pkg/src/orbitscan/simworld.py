"""Synthetic world and camera: the stand-in for a live sparse-map feed.

The world is a set of identified 3D points: dense balls of points for
target objects plus scattered background points. Observation produces
the two sensor streams the rest of the pipeline consumes: noisy world
space point estimates (the sparse map) and distorted pixel detections
(the camera image). All randomness flows through explicitly passed
numpy generators; nothing here touches global random state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidSpec
from .geometry import CameraIntrinsics, Observation, Pose, Vec3, camera_axes


@dataclass(frozen=True)
class WorldPoint:
    """One ground-truth feature point. object_id None means background."""

    id: int
    position: Vec3
    object_id: int | None = None


@dataclass(frozen=True)
class ObjectSpec:
    """A ball of feature points representing one target object."""

    centroid: Vec3
    radius: float
    count: int


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for a scene: objects plus a background box."""

    objects: tuple[ObjectSpec, ...]
    background_count: int
    background_lo: Vec3
    background_hi: Vec3


@dataclass(frozen=True)
class Scene:
    """Immutable generated world. Points carry unique sequential ids."""

    points: tuple[WorldPoint, ...]
    objects: tuple[ObjectSpec, ...]
    background_count: int
    seed: int

    @cached_property
    def ids(self) -> np.ndarray:
        return np.array([p.id for p in self.points], dtype=int)

    @cached_property
    def positions(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 3))
        return np.array([p.position.as_array() for p in self.points])

    @cached_property
    def object_ids(self) -> np.ndarray:
        """Per-point object index, -1 for background points."""
        return np.array(
            [-1 if p.object_id is None else p.object_id for p in self.points], dtype=int
        )

    def object_point_ids(self, object_index: int) -> np.ndarray:
        return self.ids[self.object_ids == object_index]


@dataclass(frozen=True, eq=False)
class SparseMapFrame:
    """One tick of the simulated mapper: visible points with noisy positions."""

    ids: np.ndarray
    positions: np.ndarray
    drone_pose: Pose
    frame_index: int = 0

    @property
    def points(self) -> list[tuple[int, Vec3]]:
        return [
            (int(i), Vec3.from_array(p)) for i, p in zip(self.ids, self.positions)
        ]


def _sample_ball(rng: np.random.Generator, count: int, centroid: Vec3, radius: float) -> np.ndarray:
    """Uniform samples inside a ball: random direction, r ~ R * u^(1/3)."""
    d = rng.standard_normal((count, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / 3.0)
    return centroid.as_array() + d * r[:, None]


def generate_scene(spec: SceneSpec, seed: int) -> Scene:
    """Build a deterministic Scene from a spec and a seed.

    Object points are uniform in each object's ball. Background points
    are uniform in the background box, rejecting samples that fall
    inside any object ball.

    Raises InvalidSpec when the box cannot hold the requested
    background points (degenerate box, or rejection never succeeds).
    """
    for obj in spec.objects:
        if obj.radius <= 0:
            raise InvalidSpec(f"object radius must be positive, got {obj.radius}")
        if obj.count < 0:
            raise InvalidSpec(f"object count must be >= 0, got {obj.count}")
    if spec.background_count < 0:
        raise InvalidSpec(f"background count must be >= 0, got {spec.background_count}")

    lo = spec.background_lo.as_array()
    hi = spec.background_hi.as_array()
    if spec.background_count > 0 and not np.all(hi > lo):
        raise InvalidSpec("background box must have positive extent on every axis")

    rng = np.random.default_rng(seed)
    points: list[WorldPoint] = []
    next_id = 0

    for obj_index, obj in enumerate(spec.objects):
        for pos in _sample_ball(rng, obj.count, obj.centroid, obj.radius):
            points.append(WorldPoint(next_id, Vec3.from_array(pos), obj_index))
            next_id += 1

    centers = np.array([o.centroid.as_array() for o in spec.objects]).reshape(-1, 3)
    radii = np.array([o.radius for o in spec.objects])
    accepted = 0
    attempts = 0
    max_attempts = 1000 + 100 * spec.background_count
    while accepted < spec.background_count:
        if attempts >= max_attempts:
            raise InvalidSpec(
                f"background box rejected {attempts} samples; "
                "box may be covered by object balls"
            )
        batch = min(spec.background_count - accepted, 256)
        candidates = rng.uniform(lo, hi, (batch, 3))
        attempts += batch
        if len(centers):
            dist = np.linalg.norm(candidates[:, None, :] - centers[None, :, :], axis=2)
            keep = np.all(dist > radii[None, :], axis=1)
        else:
            keep = np.ones(batch, dtype=bool)
        for pos in candidates[keep]:
            if accepted == spec.background_count:
                break
            points.append(WorldPoint(next_id, Vec3.from_array(pos), None))
            next_id += 1
            accepted += 1

    return Scene(tuple(points), spec.objects, spec.background_count, seed)


def _frustum_mask(
    positions: np.ndarray, pose: Pose, cam: CameraIntrinsics
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Visibility mask plus normalized coordinates and depths.

    A point is visible when its depth along the camera forward axis is
    positive and its normalized coordinates fit the pinhole field of
    view implied by the intrinsics (half extents (width/2)/fx and
    (height/2)/fy, boundary inclusive).
    """
    forward, right, up = camera_axes(pose.yaw)
    q = positions - pose.position.as_array()
    depth = q @ forward
    front = depth > 0
    safe_depth = np.where(front, depth, 1.0)
    xn = (q @ right) / safe_depth
    yn = -(q @ up) / safe_depth
    half_x = (cam.width / 2.0) / cam.fx
    half_y = (cam.height / 2.0) / cam.fy
    visible = front & (np.abs(xn) <= half_x) & (np.abs(yn) <= half_y)
    return visible, xn, yn, depth


def observe(
    scene: Scene,
    pose: Pose,
    cam: CameraIntrinsics,
    noise_sigma: float,
    rng: np.random.Generator,
    frame_index: int = 0,
) -> SparseMapFrame:
    """Emit one sparse map frame: visible points with noisy positions.

    Includes exactly the scene points inside the camera frustum and in
    front of the camera. Estimated position is ground truth plus
    isotropic Gaussian noise with the given sigma (zero sigma gives
    truth exactly). Points appear in ascending id order.
    """
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    visible, _, _, _ = _frustum_mask(scene.positions, pose, cam)
    ids = scene.ids[visible]
    truth = scene.positions[visible]
    if noise_sigma > 0:
        estimated = truth + rng.normal(0.0, noise_sigma, truth.shape)
    else:
        estimated = truth.copy()
    return SparseMapFrame(ids=ids, positions=estimated, drone_pose=pose, frame_index=frame_index)


def observe_pixels(
    scene: Scene,
    pose: Pose,
    cam: CameraIntrinsics,
    pixel_sigma: float,
    rng: np.random.Generator,
) -> list[Observation]:
    """Emit the camera image as identified, distorted pixel detections.

    Each in-front point is projected, radially distorted, and offset by
    Gaussian pixel noise; detections landing outside the image bounds
    are dropped, so every returned Observation satisfies the in-bounds
    invariant. Ordered by ascending point id.
    """
    if pixel_sigma < 0:
        raise ValueError(f"pixel_sigma must be >= 0, got {pixel_sigma}")
    forward, right, up = camera_axes(pose.yaw)
    q = scene.positions - pose.position.as_array()
    depth = q @ forward
    front = depth > 0
    safe_depth = np.where(front, depth, 1.0)
    xn = (q @ right) / safe_depth
    yn = -(q @ up) / safe_depth
    r2 = xn * xn + yn * yn
    s = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2
    u = cam.fx * s * xn + cam.cx
    v = cam.fy * s * yn + cam.cy
    if pixel_sigma > 0:
        u = u + rng.normal(0.0, pixel_sigma, u.shape)
        v = v + rng.normal(0.0, pixel_sigma, v.shape)
    in_bounds = front & (u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)
    return [
        Observation(int(i), (float(uu), float(vv)))
        for i, uu, vv in zip(scene.ids[in_bounds], u[in_bounds], v[in_bounds])
    ]
