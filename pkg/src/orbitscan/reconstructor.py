"""Multi-view dense reconstruction from captured frames.

Correspondences come from point identity: the simulated detector
reports which world point each pixel belongs to, standing in for a
descriptor matcher. The stage finds overlapping frames, undistorts
pixels, triangulates every point observed from at least two connected
frames, scores the cloud against ground truth, and exports PLY.
Reconstruction reads pose estimates by default; oracle poses isolate
triangulation error from estimator error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ply
from .capture import CaptureSet
from .errors import (
    DegenerateGeometry,
    EmptyReconstruction,
    InsufficientViews,
    NonConvergent,
)
from .geometry import (
    CameraIntrinsics,
    Pose,
    Vec3,
    distort_pixel,
    project_normalized,
    triangulate_point,
    undistort_pixel,
)
from .simworld import Scene

MODE_SPARSE = "sparse"
MODE_DENSE = "dense"


@dataclass(frozen=True)
class OverlapGraph:
    """Frames as nodes, edges where two frames share enough point ids."""

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class ReconstructedPoint:
    position: Vec3
    point_id: int
    view_count: int
    residual: float


@dataclass(frozen=True)
class DenseCloud:
    """Triangulated points in ascending id order plus skip statistics."""

    points: tuple[ReconstructedPoint, ...]
    skipped_underviewed: int
    skipped_degenerate: int

    def positions(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 3))
        return np.array([p.position.as_array() for p in self.points])

    def point_ids(self) -> set[int]:
        return {p.point_id for p in self.points}


@dataclass(frozen=True)
class QualityReport:
    """Cloud quality vs ground truth. Errors are None for empty clouds."""

    completeness: float
    median_error: float | None
    rms_error: float | None
    point_count: int
    skipped_underviewed: int
    skipped_degenerate: int

    def as_dict(self) -> dict:
        return {
            "completeness": self.completeness,
            "median_error": self.median_error,
            "rms_error": self.rms_error,
            "point_count": self.point_count,
            "skipped_underviewed": self.skipped_underviewed,
            "skipped_degenerate": self.skipped_degenerate,
        }


def find_overlaps(captures: CaptureSet, overlap_min: int) -> OverlapGraph:
    """Connect every pair of frames sharing at least overlap_min ids."""
    if overlap_min < 1:
        raise ValueError(f"overlap_min must be >= 1, got {overlap_min}")
    id_sets = [
        {obs.point_id for obs in frame.observations} for frame in captures.frames
    ]
    nodes = tuple(range(len(captures.frames)))
    edges = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            shared = len(id_sets[i] & id_sets[j])
            if shared >= overlap_min:
                edges.append((i, j, shared))
    return OverlapGraph(nodes=nodes, edges=tuple(edges))


def _connected_components(graph: OverlapGraph) -> dict[int, int]:
    """Map each frame index to a component index, components numbered
    in order of their lowest frame index."""
    adjacency: dict[int, list[int]] = {n: [] for n in graph.nodes}
    for i, j, _ in graph.edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    component: dict[int, int] = {}
    next_component = 0
    for start in graph.nodes:
        if start in component:
            continue
        stack = [start]
        component[start] = next_component
        while stack:
            node = stack.pop()
            for nb in adjacency[node]:
                if nb not in component:
                    component[nb] = next_component
                    stack.append(nb)
        next_component += 1
    return component


def reconstruct(
    captures: CaptureSet,
    cam: CameraIntrinsics,
    mode: str = MODE_DENSE,
    oracle_poses: bool = False,
    sparse_map_ids: set[int] | None = None,
    overlap_min: int = 1,
) -> DenseCloud:
    """Triangulate every point seen from at least two connected frames.

    Sparse mode restricts to ids present in the mission's sparse map
    (sparse_map_ids); dense mode uses every observed id. For each id
    the observations are limited to one connected component of the
    overlap graph (the one holding most of its observations, ties to
    the lowest component index). Points whose triangulation is
    degenerate, or that end up with fewer than two usable views, are
    skipped and counted.

    Raises InsufficientViews with fewer than two captures and
    EmptyReconstruction when nothing could be triangulated.
    """
    if mode not in (MODE_SPARSE, MODE_DENSE):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == MODE_SPARSE and sparse_map_ids is None:
        raise ValueError("sparse mode requires sparse_map_ids")
    if len(captures.frames) < 2:
        raise InsufficientViews(
            f"reconstruction needs >= 2 captures, got {len(captures.frames)}"
        )

    graph = find_overlaps(captures, overlap_min)
    component = _connected_components(graph)
    poses: list[Pose] = [
        frame.pose_truth if oracle_poses else frame.pose_estimate
        for frame in captures.frames
    ]

    sightings: dict[int, list[tuple[int, tuple[float, float]]]] = {}
    for frame_idx, frame in enumerate(captures.frames):
        for obs in frame.observations:
            if mode == MODE_SPARSE and obs.point_id not in sparse_map_ids:
                continue
            sightings.setdefault(obs.point_id, []).append((frame_idx, obs.pixel))

    points: list[ReconstructedPoint] = []
    skipped_underviewed = 0
    skipped_degenerate = 0
    for point_id in sorted(sightings):
        obs_list = sightings[point_id]
        by_component: dict[int, list[tuple[int, tuple[float, float]]]] = {}
        for frame_idx, pixel in obs_list:
            by_component.setdefault(component[frame_idx], []).append((frame_idx, pixel))
        comp = min(by_component, key=lambda c: (-len(by_component[c]), c))
        usable = by_component[comp]

        rays = []
        for frame_idx, pixel in usable:
            try:
                normalized = undistort_pixel(pixel, cam)
            except NonConvergent:
                continue  # detection outside the invertible lens region
            rays.append((frame_idx, poses[frame_idx], normalized))
        if len(rays) < 2:
            skipped_underviewed += 1
            continue

        try:
            position = triangulate_point([(pose, norm) for _, pose, norm in rays])
        except DegenerateGeometry:
            skipped_degenerate += 1
            continue

        sq_sum = 0.0
        n_proj = 0
        for frame_idx, pose, _ in rays:
            xn, yn, depth = project_normalized(pose, position)
            if depth <= 0:
                continue
            u, v = distort_pixel((xn, yn), cam)
            observed = dict(usable)[frame_idx]
            sq_sum += (u - observed[0]) ** 2 + (v - observed[1]) ** 2
            n_proj += 1
        residual = math.sqrt(sq_sum / n_proj) if n_proj else float("inf")
        points.append(
            ReconstructedPoint(
                position=position,
                point_id=point_id,
                view_count=len(rays),
                residual=residual,
            )
        )

    if not points:
        raise EmptyReconstruction("no point was observed in two usable views")
    return DenseCloud(
        points=tuple(points),
        skipped_underviewed=skipped_underviewed,
        skipped_degenerate=skipped_degenerate,
    )


def score(cloud: DenseCloud, scene: Scene, eligible_ids: set[int] | None = None) -> QualityReport:
    """Score a cloud against scene ground truth.

    Completeness is the fraction of object points reconstructed; the
    denominator is eligible_ids when given (for example, only points
    visible from two captures), otherwise every object point in the
    scene. Accuracy is measured over all reconstructed points with
    known ground truth.
    """
    truth_by_id = {int(i): scene.positions[idx] for idx, i in enumerate(scene.ids)}
    object_ids = {int(i) for i in scene.ids[scene.object_ids >= 0]}
    denominator = object_ids if eligible_ids is None else set(eligible_ids)
    reconstructed = cloud.point_ids()
    if denominator:
        completeness = len(reconstructed & denominator) / len(denominator)
    else:
        completeness = 1.0

    errors = [
        float(np.linalg.norm(p.position.as_array() - truth_by_id[p.point_id]))
        for p in cloud.points
        if p.point_id in truth_by_id
    ]
    if errors:
        median_error = float(np.median(errors))
        rms_error = float(math.sqrt(np.mean(np.square(errors))))
    else:
        median_error = None
        rms_error = None
    return QualityReport(
        completeness=completeness,
        median_error=median_error,
        rms_error=rms_error,
        point_count=len(cloud.points),
        skipped_underviewed=cloud.skipped_underviewed,
        skipped_degenerate=cloud.skipped_degenerate,
    )


def export_ply(cloud: DenseCloud, destination) -> None:
    """Write the cloud to an ASCII PLY file, points in id order."""
    ply.write_ply(destination, cloud.positions())
