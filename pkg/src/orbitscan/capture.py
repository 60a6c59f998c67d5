"""Frame buffering and waypoint-gated capture.

The camera produces a frame every tick; only the newest one is kept.
When the vehicle reports a waypoint reached, the buffered frame is
stamped and appended to the capture set. If no fresh frame arrived
since the previous capture the latest one is reused and flagged, so
the condition stays diagnosable without failing the mission.

Capture sets serialize to JSON lines, one frame per line, so a
reconstruction can run from a file without rerunning the flight.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import IoFailure, NoFrameAvailable
from .geometry import Observation, Pose, Vec3


@dataclass(frozen=True)
class SensorFrame:
    """One camera tick: identified pixel detections plus the poses at capture time."""

    observations: tuple[Observation, ...]
    pose_estimate: Pose
    pose_truth: Pose
    frame_index: int


@dataclass(frozen=True)
class FrameBuffer:
    """Holds at most the single newest frame."""

    latest: SensorFrame | None = None


@dataclass(frozen=True)
class CaptureFrame:
    """A buffered frame promoted to a capture at a waypoint.

    pose_truth is carried for oracle-mode evaluation only; the
    reconstruction path reads pose_estimate unless explicitly asked
    for oracle poses.
    """

    waypoint_index: int
    observations: tuple[Observation, ...]
    pose_estimate: Pose
    pose_truth: Pose
    duplicate_of_latest: bool
    source_frame_index: int


@dataclass(frozen=True)
class CaptureSet:
    """Captures ordered by waypoint index."""

    frames: tuple[CaptureFrame, ...] = ()


def on_frame(buffer: FrameBuffer, frame: SensorFrame) -> FrameBuffer:
    """Replace the buffer content with the newest frame."""
    return FrameBuffer(latest=frame)


def on_waypoint_reached(
    buffer: FrameBuffer, captures: CaptureSet, waypoint_index: int
) -> CaptureSet:
    """Stamp the buffered frame with the waypoint and append it.

    Raises NoFrameAvailable if no frame was ever buffered, which means
    the simulation wiring is broken. Reusing a frame already captured
    is legal but flagged via duplicate_of_latest.
    """
    if buffer.latest is None:
        raise NoFrameAvailable(f"waypoint {waypoint_index} reached before any frame arrived")
    if captures.frames and waypoint_index <= captures.frames[-1].waypoint_index:
        raise ValueError(
            f"waypoint index {waypoint_index} not after previous "
            f"{captures.frames[-1].waypoint_index}"
        )
    frame = buffer.latest
    duplicate = bool(
        captures.frames
        and captures.frames[-1].source_frame_index == frame.frame_index
    )
    captured = CaptureFrame(
        waypoint_index=waypoint_index,
        observations=frame.observations,
        pose_estimate=frame.pose_estimate,
        pose_truth=frame.pose_truth,
        duplicate_of_latest=duplicate,
        source_frame_index=frame.frame_index,
    )
    return CaptureSet(frames=captures.frames + (captured,))


def ready_for_reconstruction(captures: CaptureSet) -> bool:
    """Reconstruction may start once at least two captures exist."""
    return len(captures.frames) >= 2


def _pose_to_dict(pose: Pose) -> dict:
    return {"x": pose.position.x, "y": pose.position.y, "z": pose.position.z, "yaw": pose.yaw}


def _pose_from_dict(d: dict) -> Pose:
    return Pose(Vec3(d["x"], d["y"], d["z"]), d["yaw"])


def save_captures(captures: CaptureSet, path) -> None:
    """Write one JSON object per capture frame. Deterministic bytes."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for frame in captures.frames:
                record = {
                    "waypoint_index": frame.waypoint_index,
                    "source_frame_index": frame.source_frame_index,
                    "duplicate_of_latest": frame.duplicate_of_latest,
                    "pose_estimate": _pose_to_dict(frame.pose_estimate),
                    "pose_truth": _pose_to_dict(frame.pose_truth),
                    "observations": [
                        [obs.point_id, obs.pixel[0], obs.pixel[1]]
                        for obs in frame.observations
                    ],
                }
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write captures to {path}: {exc}") from exc


def load_captures(path) -> CaptureSet:
    """Read a capture set written by save_captures."""
    frames = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    frames.append(
                        CaptureFrame(
                            waypoint_index=int(record["waypoint_index"]),
                            observations=tuple(
                                Observation(int(pid), (float(u), float(v)))
                                for pid, u, v in record["observations"]
                            ),
                            pose_estimate=_pose_from_dict(record["pose_estimate"]),
                            pose_truth=_pose_from_dict(record["pose_truth"]),
                            duplicate_of_latest=bool(record["duplicate_of_latest"]),
                            source_frame_index=int(record["source_frame_index"]),
                        )
                    )
                except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
                    raise IoFailure(f"{path}:{line_no}: malformed capture record: {exc}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read captures from {path}: {exc}") from exc
    return CaptureSet(frames=tuple(frames))
