"""Deterministic simulation of an autonomous object-scanning drone.

The pipeline: accumulate a sparse feature map, find a target object by
depth filtering and density clustering, fly a camera-facing orbit
around it under proportional control with a Kalman pose estimator,
capture frames at waypoints, and triangulate a dense point cloud that
is scored against ground truth and exported as PLY.
"""

from .config import MissionConfig, default_config, dump_config, load_config
from .errors import (
    DegenerateGeometry,
    DegenerateOrbit,
    EmptyFrame,
    EmptyReconstruction,
    IllegalTransition,
    InsufficientViews,
    InvalidSpec,
    IoFailure,
    NoFrameAvailable,
    NonConvergent,
    NoTarget,
    OrbitscanError,
)
from .geometry import CameraIntrinsics, Observation, Pose, Vec3
from .mission import MissionReport, emit_report, run

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "DegenerateGeometry",
    "DegenerateOrbit",
    "EmptyFrame",
    "EmptyReconstruction",
    "IllegalTransition",
    "InsufficientViews",
    "InvalidSpec",
    "IoFailure",
    "MissionConfig",
    "MissionReport",
    "NoFrameAvailable",
    "NonConvergent",
    "NoTarget",
    "Observation",
    "OrbitscanError",
    "Pose",
    "Vec3",
    "default_config",
    "dump_config",
    "emit_report",
    "load_config",
    "run",
    "__version__",
]
