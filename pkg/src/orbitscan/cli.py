"""Command line interface.

Four subcommands mirror the pipeline stages: ``simulate`` runs a full
mission from a config file into an output directory, ``detect`` runs
target detection on a PLY cloud, ``plan`` prints an orbit for a target
and pose, and ``reconstruct`` triangulates a saved capture bundle.

Exit codes: 0 on success (simulate: mission Done), 1 when a stage
reports a domain failure (simulate: mission Aborted, reason on
stderr), 2 for unusable inputs (bad config, unreadable files).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import detector, planner, reconstructor
from .capture import load_captures
from .config import MissionConfig, default_config, load_config
from .errors import InvalidSpec, IoFailure, OrbitscanError
from .figures import render_figures
from .geometry import CameraIntrinsics, Pose, Vec3
from .mission import S_DONE, emit_report, run
from .ply import read_ply, write_ply
from .simworld import SparseMapFrame, generate_scene


def _add_pose_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--pose",
        nargs=4,
        type=float,
        metavar=("X", "Y", "Z", "YAW"),
        required=True,
        help="vehicle pose: position in meters, yaw in radians",
    )


def _pose_from_args(values) -> Pose:
    return Pose(Vec3(values[0], values[1], values[2]), values[3])


def _open_out(path):
    if path is None:
        return sys.stdout
    return open(path, "w", encoding="utf-8")


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    report = run(config)
    emit_report(report, args.out)
    if not args.no_figures:
        render_figures(report, args.out)
    if report.final_state == S_DONE:
        print(f"mission Done: {len(report.captures.frames)} captures, "
              f"{report.quality.point_count if report.quality else 0} points reconstructed")
        return 0
    print(f"mission aborted: {report.abort_reason}", file=sys.stderr)
    return 1


def _cmd_detect(args) -> int:
    positions = read_ply(args.cloud)
    frame = SparseMapFrame(
        ids=np.arange(len(positions)),
        positions=positions,
        drone_pose=_pose_from_args(args.pose),
    )
    filter_params = detector.FilterParams(
        keep_fraction=args.keep_fraction, depth_axis=args.depth_axis
    )
    dbscan_params = detector.DbscanParams(eps=args.eps, min_points=args.min_points)
    filtered, clusters, target = detector.run_detection(frame, filter_params, dbscan_params)

    out = _open_out(args.out)
    try:
        out.write(f"target,{target.x:.9g},{target.y:.9g},{target.z:.9g}\n")
        for k, cluster in enumerate(clusters.clusters):
            c = cluster.centroid
            out.write(f"cluster,{k},{c.x:.9g},{c.y:.9g},{c.z:.9g},{len(cluster.members)}\n")
        for pid, label in zip(filtered.ids, clusters.labels):
            out.write(f"label,{int(pid)},{int(label)}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_plan(args) -> int:
    target = Vec3(*args.target)
    pose = _pose_from_args(args.pose)
    direction = planner.CCW if args.direction == "ccw" else planner.CW
    n = args.n
    if args.spacing is not None:
        radius = float(np.hypot(pose.position.x - target.x, pose.position.y - target.y))
        n = planner.n_from_spacing(radius, args.spacing)
    plan = planner.plan_orbit(target, pose, n, direction, args.min_radius)

    out = _open_out(args.out)
    try:
        out.write(f"orbit,{plan.center.x:.9g},{plan.center.y:.9g},{plan.center.z:.9g},"
                  f"{plan.radius:.9g},{plan.direction}\n")
        for w in plan.waypoints:
            p = w.pose.position
            out.write(
                f"waypoint,{w.index},{p.x:.9g},{p.y:.9g},{p.z:.9g},"
                f"{w.pose.yaw:.9g},{w.angle_on_circle:.9g}\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _camera_from_args(args) -> CameraIntrinsics:
    base = load_config(args.config).camera if args.config else default_config().camera
    overrides = {
        name: getattr(args, name)
        for name in ("fx", "fy", "cx", "cy", "k1", "k2", "width", "height")
        if getattr(args, name) is not None
    }
    if not overrides:
        return base
    from dataclasses import replace

    return replace(base, **overrides)


def _cmd_reconstruct(args) -> int:
    captures = load_captures(args.captures)
    cam = _camera_from_args(args)
    cloud = reconstructor.reconstruct(
        captures,
        cam,
        mode=args.mode,
        oracle_poses=args.oracle_poses,
        sparse_map_ids=None,
        overlap_min=args.overlap_min,
    )
    write_ply(args.out_ply, cloud.positions())

    residuals = [p.residual for p in cloud.points]
    doc = {
        "point_count": len(cloud.points),
        "skipped_underviewed": cloud.skipped_underviewed,
        "skipped_degenerate": cloud.skipped_degenerate,
        "median_residual_px": float(np.median(residuals)),
        "rms_residual_px": float(np.sqrt(np.mean(np.square(residuals)))),
        "ply": args.out_ply,
    }
    if args.config:
        config = load_config(args.config)
        scene = generate_scene(config.scene, config.seed)
        doc["truth_quality"] = reconstructor.score(cloud, scene).as_dict()

    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitscan",
        description="Simulated autonomous object scanning: map, detect, orbit, reconstruct.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a full mission from a config file")
    p.add_argument("--config", required=True, help="YAML mission config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("detect", help="detect a target in a PLY point cloud")
    p.add_argument("--cloud", required=True, help="input ASCII PLY file")
    _add_pose_arguments(p)
    p.add_argument("--eps", type=float, default=detector.DbscanParams().eps)
    p.add_argument("--min-points", type=int, default=detector.DbscanParams().min_points)
    p.add_argument("--keep-fraction", type=float, default=detector.FilterParams().keep_fraction)
    p.add_argument(
        "--depth-axis",
        choices=(detector.DEPTH_VIEW_AXIS, detector.DEPTH_WORLD_Y),
        default=detector.DEPTH_VIEW_AXIS,
    )
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(fn=_cmd_detect)

    p = sub.add_parser("plan", help="plan an orbit around a target")
    p.add_argument("--target", nargs=3, type=float, metavar=("X", "Y", "Z"), required=True)
    _add_pose_arguments(p)
    p.add_argument("--n", type=int, default=12, help="waypoint count")
    p.add_argument("--direction", choices=("ccw", "cw"), default="ccw")
    p.add_argument("--spacing", type=float, default=None,
                   help="derive waypoint count from arc spacing in meters")
    p.add_argument("--min-radius", type=float, default=0.5)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(fn=_cmd_plan)

    p = sub.add_parser("reconstruct", help="triangulate a saved capture bundle")
    p.add_argument("--captures", required=True, help="captures.jsonl from a mission")
    p.add_argument("--out-ply", required=True, help="output PLY path")
    p.add_argument("--report", default=None, help="quality report JSON path (default stdout)")
    p.add_argument("--mode", choices=(reconstructor.MODE_DENSE,), default=reconstructor.MODE_DENSE,
                   help="sparse mode needs the mission's live map and is simulate-only")
    p.add_argument("--oracle-poses", action="store_true",
                   help="triangulate from ground-truth poses instead of estimates")
    p.add_argument("--overlap-min", type=int, default=1)
    p.add_argument("--config", default=None,
                   help="mission config supplying camera intrinsics and, with its seed, "
                        "ground truth for scoring")
    for name, kind in (
        ("fx", float), ("fy", float), ("cx", float), ("cy", float),
        ("k1", float), ("k2", float), ("width", int), ("height", int),
    ):
        p.add_argument(f"--{name}", type=kind, default=None, help=f"camera {name} override")
    p.set_defaults(fn=_cmd_reconstruct)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.fn(args)
    except (InvalidSpec, IoFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OrbitscanError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
