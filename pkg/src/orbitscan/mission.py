"""Mission orchestration: the full pipeline as a deterministic tick loop.

States advance strictly along
    Idle -> Mapping -> Detecting -> Orbiting -> Reconstructing -> Done
with any non-terminal state allowed to abort. One tick is one control
period: command, plant step, estimator predict, observation, optional
vision update, frame buffering, then state logic. All randomness
comes from generators derived from the config seed, so a config fully
determines the report bytes.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, replace

import numpy as np

from . import capture as capture_mod
from . import detector, planner, reconstructor, simworld, vehicle
from .config import WAYPOINTS_BY_SPACING, MissionConfig
from .controller import control_step, waypoint_reached
from .errors import (
    DegenerateOrbit,
    EmptyFrame,
    EmptyReconstruction,
    IllegalTransition,
    InsufficientViews,
    IoFailure,
    NoTarget,
)
from .geometry import Pose, Vec3
from .ply import write_ply
from .reconstructor import QualityReport
from .simworld import Scene, SparseMapFrame

log = logging.getLogger(__name__)

S_IDLE = "Idle"
S_MAPPING = "Mapping"
S_DETECTING = "Detecting"
S_ORBITING = "Orbiting"
S_RECONSTRUCTING = "Reconstructing"
S_DONE = "Done"
S_ABORTED = "Aborted"

E_START = "Start"
E_MAP_READY = "MapReady"
E_TARGET_FOUND = "TargetFound"
E_WAYPOINT_REACHED = "WaypointReached"
E_RECONSTRUCTION_DONE = "ReconstructionDone"
E_ABORT = "Abort"


@dataclass(frozen=True)
class MissionState:
    """Current pipeline stage. Orbiting carries its waypoint progress."""

    name: str
    waypoint: int | None = None
    total_waypoints: int | None = None
    reason: str | None = None

    def label(self) -> str:
        if self.name == S_ORBITING:
            return f"{S_ORBITING}({self.waypoint})"
        if self.name == S_ABORTED:
            return f"{S_ABORTED}({self.reason})"
        return self.name

    @property
    def terminal(self) -> bool:
        return self.name in (S_DONE, S_ABORTED)


IDLE = MissionState(S_IDLE)


@dataclass(frozen=True)
class Event:
    name: str
    total_waypoints: int | None = None
    reason: str | None = None


def transition(state: MissionState, event: Event) -> MissionState:
    """Apply one event to the state machine.

    Raises IllegalTransition for any pair outside the pipeline order;
    terminal states accept nothing, every other state accepts Abort.
    """
    if not state.terminal and event.name == E_ABORT:
        return MissionState(S_ABORTED, reason=event.reason or "unspecified")
    if state.name == S_IDLE and event.name == E_START:
        return MissionState(S_MAPPING)
    if state.name == S_MAPPING and event.name == E_MAP_READY:
        return MissionState(S_DETECTING)
    if state.name == S_DETECTING and event.name == E_TARGET_FOUND:
        if not event.total_waypoints or event.total_waypoints < 2:
            raise IllegalTransition(f"TargetFound requires >= 2 waypoints, got {event.total_waypoints}")
        return MissionState(S_ORBITING, waypoint=0, total_waypoints=event.total_waypoints)
    if state.name == S_ORBITING and event.name == E_WAYPOINT_REACHED:
        nxt = state.waypoint + 1
        if nxt >= state.total_waypoints:
            return MissionState(S_RECONSTRUCTING)
        return MissionState(S_ORBITING, waypoint=nxt, total_waypoints=state.total_waypoints)
    if state.name == S_RECONSTRUCTING and event.name == E_RECONSTRUCTION_DONE:
        return MissionState(S_DONE)
    raise IllegalTransition(f"event {event.name} not legal in state {state.label()}")


@dataclass(frozen=True, eq=False)
class DetectionSnapshot:
    """What detection saw, kept for reporting and plots."""

    map_ids: np.ndarray
    map_positions: np.ndarray
    filtered_ids: np.ndarray
    filtered_positions: np.ndarray
    labels: np.ndarray
    target: Vec3
    error_vs_truth: float | None


@dataclass(frozen=True, eq=False)
class MissionReport:
    """Everything a finished mission produced.

    Scalar results are mirrored into report.json by emit_report; the
    bulky arrays (trajectory, clouds) go to their own files.
    """

    final_state: str
    abort_reason: str | None
    durations: dict[str, float]
    detection: DetectionSnapshot | None
    waypoints_reached: int
    quality: QualityReport | None
    events: tuple[tuple[float, str, str], ...]
    trajectory: tuple[tuple, ...]
    captures: capture_mod.CaptureSet
    cloud: reconstructor.DenseCloud | None
    plan: planner.OrbitPlan | None
    scene: Scene
    max_yaw_command: float
    seed: int


def _measure_pose(truth: Pose, sigma: float, rng: np.random.Generator) -> Pose:
    """Vision pose measurement: truth plus per-axis Gaussian noise."""
    n = rng.normal(0.0, sigma, 4)
    p = truth.position
    return Pose(Vec3(p.x + n[0], p.y + n[1], p.z + n[2]), truth.yaw + n[3])


def _object_centroids(scene: Scene) -> list[np.ndarray]:
    """Empirical centroid of each object's generated points."""
    out = []
    for obj_index in range(len(scene.objects)):
        mask = scene.object_ids == obj_index
        out.append(scene.positions[mask].mean(axis=0))
    return out


def run(config: MissionConfig) -> MissionReport:
    """Execute a full mission and return its report.

    Stage failures abort the mission rather than raising: the report's
    final state carries the reason, and emit_report still works.
    """
    scene = simworld.generate_scene(config.scene, config.seed)
    seed_seq = np.random.SeedSequence(config.seed)
    map_rng, pixel_rng, vision_rng = (
        np.random.default_rng(s) for s in seed_seq.spawn(3)
    )

    dt = config.dt
    r_meas = config.vision_sigma**2
    truth = vehicle.VehicleState(pose=config.start)
    iv = config.initial_variance
    est = vehicle.EstimatorState(
        pose_estimate=config.start, variances=(iv, iv, iv, iv), vision_available=True
    )

    state = transition(IDLE, Event(E_START))
    t = 0.0
    tick = 0
    durations: dict[str, float] = {}
    events: list[tuple[float, str, str]] = [(0.0, E_START, "")]
    trajectory: list[tuple] = []
    accumulated: dict[int, np.ndarray] = {}
    buffer = capture_mod.FrameBuffer()
    captures = capture_mod.CaptureSet()
    plan: planner.OrbitPlan | None = None
    detection: DetectionSnapshot | None = None
    cloud: reconstructor.DenseCloud | None = None
    quality: QualityReport | None = None
    waypoints_reached = 0
    max_yaw_command = 0.0
    last_detect_error = "NoTarget"

    def record(name: str, detail: str = "") -> None:
        events.append((t, name, detail))
        log.info("t=%.3f %s %s", t, name, detail)

    def abort(reason: str) -> MissionState:
        record(E_ABORT, reason)
        return transition(state, Event(E_ABORT, reason=reason))

    def accumulated_frame() -> SparseMapFrame:
        ids = np.array(sorted(accumulated), dtype=int)
        positions = (
            np.array([accumulated[i] for i in ids]) if len(ids) else np.zeros((0, 3))
        )
        return SparseMapFrame(
            ids=ids, positions=positions, drone_pose=est.pose_estimate, frame_index=tick
        )

    while not state.terminal:
        if state.name == S_RECONSTRUCTING:
            durations.setdefault(S_RECONSTRUCTING, 0.0)
            try:
                cloud = reconstructor.reconstruct(
                    captures,
                    config.camera,
                    mode=config.recon_mode,
                    oracle_poses=config.oracle_poses,
                    sparse_map_ids=set(accumulated),
                    overlap_min=config.overlap_min,
                )
            except (InsufficientViews, EmptyReconstruction) as exc:
                state = abort(type(exc).__name__)
                break
            quality = reconstructor.score(cloud, scene)
            record(E_RECONSTRUCTION_DONE, f"points={quality.point_count}")
            state = transition(state, Event(E_RECONSTRUCTION_DONE))
            continue

        if state.name == S_ORBITING:
            wp = plan.waypoints[state.waypoint]
            cmd = control_step(wp, est.pose_estimate, config.gains, config.clamps)
            max_yaw_command = max(max_yaw_command, abs(cmd.vyaw))
        else:
            cmd = vehicle.ControlCommand()

        truth = vehicle.step_dynamics(truth, cmd, dt, config.vehicle)
        est = vehicle.predict(est, cmd, dt, config.vehicle)
        frame = simworld.observe(
            scene, truth.pose, config.camera, config.map_sigma, map_rng, frame_index=tick
        )
        gated = vehicle.vision_gate(truth, len(frame.ids), config.vehicle)
        est = replace(est, vision_available=gated)
        if gated:
            est = vehicle.update(
                est, _measure_pose(truth.pose, config.vision_sigma, vision_rng), r_meas
            )
        pixels = simworld.observe_pixels(
            scene, truth.pose, config.camera, config.pixel_sigma, pixel_rng
        )
        buffer = capture_mod.on_frame(
            buffer,
            capture_mod.SensorFrame(
                observations=tuple(pixels),
                pose_estimate=est.pose_estimate,
                pose_truth=truth.pose,
                frame_index=tick,
            ),
        )

        t += dt
        tick += 1
        durations[state.name] = durations.get(state.name, 0.0) + dt
        tp, ep = truth.pose, est.pose_estimate
        trajectory.append(
            (
                t,
                tp.position.x, tp.position.y, tp.position.z, tp.yaw,
                ep.position.x, ep.position.y, ep.position.z, ep.yaw,
                cmd.vx, cmd.vy, cmd.vz, cmd.vyaw,
                1 if gated else 0,
                state.name,
            )
        )

        if state.name in (S_MAPPING, S_DETECTING):
            for pid, pos in zip(frame.ids, frame.positions):
                accumulated[int(pid)] = pos

        if state.name == S_MAPPING:
            if (
                len(accumulated) >= config.min_map_points
                or durations[S_MAPPING] >= config.mapping_timeout
            ):
                record(E_MAP_READY, f"points={len(accumulated)}")
                state = transition(state, Event(E_MAP_READY))
            continue

        if state.name == S_DETECTING:
            map_frame = accumulated_frame()
            try:
                filtered, clusters, target = detector.run_detection(
                    map_frame, config.filter_params, config.dbscan_params
                )
            except (EmptyFrame, NoTarget) as exc:
                last_detect_error = type(exc).__name__
                if durations[S_DETECTING] >= config.detect_timeout:
                    state = abort(last_detect_error)
                continue

            error = None
            centroids = _object_centroids(scene)
            if centroids:
                error = min(
                    float(np.linalg.norm(target.as_array() - c)) for c in centroids
                )
            detection = DetectionSnapshot(
                map_ids=map_frame.ids,
                map_positions=map_frame.positions,
                filtered_ids=filtered.ids,
                filtered_positions=filtered.positions,
                labels=clusters.labels,
                target=target,
                error_vs_truth=error,
            )
            n = config.orbit_waypoints
            if config.waypoint_mode == WAYPOINTS_BY_SPACING:
                radius = float(
                    np.hypot(
                        est.pose_estimate.position.x - target.x,
                        est.pose_estimate.position.y - target.y,
                    )
                )
                n = planner.n_from_spacing(radius, config.waypoint_spacing)
            try:
                plan = planner.plan_orbit(
                    target,
                    est.pose_estimate,
                    n,
                    config.orbit_direction,
                    config.orbit_min_radius,
                )
            except DegenerateOrbit as exc:
                state = abort(type(exc).__name__)
                continue
            record(E_TARGET_FOUND, f"target=({target.x:.3f},{target.y:.3f},{target.z:.3f})")
            state = transition(state, Event(E_TARGET_FOUND, total_waypoints=n))
            continue

        if state.name == S_ORBITING:
            wp = plan.waypoints[state.waypoint]
            if waypoint_reached(wp, est.pose_estimate, config.tolerances):
                captures = capture_mod.on_waypoint_reached(buffer, captures, wp.index)
                waypoints_reached += 1
                record(E_WAYPOINT_REACHED, f"index={wp.index}")
                state = transition(state, Event(E_WAYPOINT_REACHED))
            if state.name == S_ORBITING and durations.get(S_ORBITING, 0.0) >= config.orbit_timeout:
                state = abort("OrbitTimeout")
            continue

    if state.name == S_DONE:
        record(S_DONE, "")
    return MissionReport(
        final_state=state.label(),
        abort_reason=state.reason,
        durations=durations,
        detection=detection,
        waypoints_reached=waypoints_reached,
        quality=quality,
        events=tuple(events),
        trajectory=tuple(trajectory),
        captures=captures,
        cloud=cloud,
        plan=plan,
        scene=scene,
        max_yaw_command=max_yaw_command,
        seed=config.seed,
    )


TRAJECTORY_HEADER = (
    "t,truth_x,truth_y,truth_z,truth_yaw,"
    "est_x,est_y,est_z,est_yaw,cmd_vx,cmd_vy,cmd_vz,cmd_vyaw,vision,state"
)


def emit_report(report: MissionReport, out_dir) -> dict:
    """Write the mission outputs into a directory.

    Produces report.json, events.csv, trajectory.csv, captures.jsonl,
    map.ply (the accumulated sparse map is reconstructed from the
    detection snapshot when available), and reconstruction.ply for a
    completed mission. Returns the report.json content as a dict.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output directory {out_dir}: {exc}") from exc

    doc = {
        "final_state": report.final_state,
        "abort_reason": report.abort_reason,
        "seed": report.seed,
        "durations": {k: v for k, v in sorted(report.durations.items())},
        "waypoints_reached": report.waypoints_reached,
        "capture_count": len(report.captures.frames),
        "max_yaw_command": report.max_yaw_command,
        "detection": None,
        "quality": report.quality.as_dict() if report.quality else None,
        "files": {
            "events": "events.csv",
            "trajectory": "trajectory.csv",
            "captures": "captures.jsonl",
            "map_ply": "map.ply" if report.detection is not None else None,
            "reconstruction_ply": "reconstruction.ply" if report.cloud is not None else None,
        },
    }
    if report.detection is not None:
        d = report.detection
        doc["detection"] = {
            "target": [d.target.x, d.target.y, d.target.z],
            "error_vs_truth": d.error_vs_truth,
            "map_points": int(len(d.map_ids)),
            "filtered_points": int(len(d.filtered_ids)),
            "clusters": int(d.labels.max()) + 1 if len(d.labels) else 0,
        }

    def _write(name: str, writer) -> None:
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                writer(fh)
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    _write("report.json", lambda fh: fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n"))
    _write(
        "events.csv",
        lambda fh: fh.write(
            "t,event,detail\n"
            + "".join(f"{t!r},{name},{detail}\n" for t, name, detail in report.events)
        ),
    )
    _write(
        "trajectory.csv",
        lambda fh: fh.write(
            TRAJECTORY_HEADER
            + "\n"
            + "".join(
                ",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n"
                for row in report.trajectory
            )
        ),
    )
    capture_mod.save_captures(report.captures, os.path.join(out_dir, "captures.jsonl"))
    if report.detection is not None:
        write_ply(os.path.join(out_dir, "map.ply"), report.detection.map_positions)
    if report.cloud is not None:
        reconstructor.export_ply(report.cloud, os.path.join(out_dir, "reconstruction.ply"))
    return doc
