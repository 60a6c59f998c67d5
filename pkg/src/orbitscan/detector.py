"""Target detection on sparse map frames.

Three stages, composed in order: a depth percentile filter that keeps
only the points nearest the vehicle, density-based clustering of the
survivors, and selection of the cluster closest to the vehicle. Every
stage is deterministic; ties are broken by ascending point id or
cluster index so repeated runs agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyFrame, NoTarget
from .geometry import Pose, Vec3, camera_axes
from .simworld import SparseMapFrame

NOISE = -1

DEPTH_VIEW_AXIS = "view_axis"
DEPTH_WORLD_Y = "world_y"


@dataclass(frozen=True)
class FilterParams:
    """Depth filter tuning.

    keep_fraction is the fraction of in-front points retained.
    depth_axis selects how depth is measured: along the vehicle's
    viewing axis, or as the raw world y offset.
    """

    keep_fraction: float = 0.10
    depth_axis: str = DEPTH_VIEW_AXIS

    def __post_init__(self):
        if not (0.0 < self.keep_fraction <= 1.0):
            raise ValueError(f"keep_fraction must be in (0, 1], got {self.keep_fraction}")
        if self.depth_axis not in (DEPTH_VIEW_AXIS, DEPTH_WORLD_Y):
            raise ValueError(f"unknown depth_axis {self.depth_axis!r}")


@dataclass(frozen=True)
class DbscanParams:
    eps: float = 0.99
    min_points: int = 20

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.min_points < 1:
            raise ValueError(f"min_points must be >= 1, got {self.min_points}")


@dataclass(frozen=True)
class Cluster:
    """One cluster: arithmetic mean of members plus member indices."""

    centroid: Vec3
    members: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ClusterResult:
    """Per-point labels (cluster index or NOISE) and the cluster list."""

    labels: np.ndarray
    clusters: tuple[Cluster, ...]


def depth_filter(frame: SparseMapFrame, params: FilterParams) -> SparseMapFrame:
    """Keep the in-front points with the smallest depths.

    Depth is the component of (point - vehicle position) along the
    configured axis. Points at depth <= 0 are behind the camera and
    discarded. Of the N remaining, the ceil(keep_fraction * N) with
    the smallest depths survive, ties broken by ascending id. The
    result preserves ascending id order.

    Raises EmptyFrame when nothing lies in front.
    """
    drone = frame.drone_pose.position.as_array()
    if params.depth_axis == DEPTH_VIEW_AXIS:
        forward, _, _ = camera_axes(frame.drone_pose.yaw)
        depth = (frame.positions - drone) @ forward
    else:
        depth = frame.positions[:, 1] - drone[1]

    front = depth > 0
    n_front = int(np.count_nonzero(front))
    if n_front == 0:
        raise EmptyFrame("no points in front of the vehicle")

    keep = math.ceil(params.keep_fraction * n_front)
    front_idx = np.nonzero(front)[0]
    order = np.lexsort((frame.ids[front_idx], depth[front_idx]))
    chosen = front_idx[order[:keep]]
    chosen = chosen[np.argsort(frame.ids[chosen], kind="stable")]
    return SparseMapFrame(
        ids=frame.ids[chosen],
        positions=frame.positions[chosen],
        drone_pose=frame.drone_pose,
        frame_index=frame.frame_index,
    )


def dbscan(points, params: DbscanParams) -> ClusterResult:
    """Density-based clustering with deterministic tie-breaking.

    A point's neighborhood is every OTHER point within eps (boundary
    inclusive). A point is core when that neighborhood holds strictly
    more than min_points members. Clusters are the connected
    components of the core points under the neighbor relation, labeled
    0, 1, ... in order of their lowest-index core point. A non-core
    point with core neighbors joins the cluster of its lowest-index
    core neighbor; everything else is NOISE.

    ``points`` may be a sequence of Vec3 or an (n, 3) array.
    """
    if isinstance(points, np.ndarray):
        positions = points.reshape(-1, 3).astype(float)
    else:
        positions = np.array([p.as_array() for p in points]).reshape(-1, 3)
    n = len(positions)
    if n == 0:
        return ClusterResult(labels=np.empty(0, dtype=int), clusters=())

    diff = positions[:, None, :] - positions[None, :, :]
    within = np.einsum("ijk,ijk->ij", diff, diff) <= params.eps**2
    np.fill_diagonal(within, False)
    neighbor_counts = within.sum(axis=1)
    core = neighbor_counts > params.min_points  # strict: exactly min_points is not enough

    labels = np.full(n, NOISE, dtype=int)
    n_clusters = 0
    for i in range(n):
        if not core[i] or labels[i] != NOISE:
            continue
        labels[i] = n_clusters
        stack = [i]
        while stack:
            j = stack.pop()
            for m in np.nonzero(within[j] & core)[0]:
                if labels[m] == NOISE:
                    labels[m] = n_clusters
                    stack.append(int(m))
        n_clusters += 1

    for i in range(n):
        if core[i]:
            continue
        core_neighbors = np.nonzero(within[i] & core)[0]
        if len(core_neighbors):
            labels[i] = labels[core_neighbors[0]]

    clusters = []
    for k in range(n_clusters):
        members = np.nonzero(labels == k)[0]
        centroid = Vec3.from_array(positions[members].mean(axis=0))
        clusters.append(Cluster(centroid=centroid, members=tuple(int(m) for m in members)))
    return ClusterResult(labels=labels, clusters=tuple(clusters))


def select_target(result: ClusterResult, drone_pose: Pose) -> Vec3:
    """Pick the cluster centroid nearest the vehicle.

    Ties go to the lowest cluster index. Raises NoTarget when there
    are no clusters; the mission treats that as "keep mapping".
    """
    if not result.clusters:
        raise NoTarget("clustering produced no clusters")
    drone = drone_pose.position.as_array()
    distances = [
        float(np.linalg.norm(c.centroid.as_array() - drone)) for c in result.clusters
    ]
    return result.clusters[int(np.argmin(distances))].centroid


def run_detection(
    frame: SparseMapFrame, filter_params: FilterParams, dbscan_params: DbscanParams
) -> tuple[SparseMapFrame, ClusterResult, Vec3]:
    """Compose filter, clustering, and selection on one frame."""
    filtered = depth_filter(frame, filter_params)
    clusters = dbscan(filtered.positions, dbscan_params)
    target = select_target(clusters, frame.drone_pose)
    return filtered, clusters, target
