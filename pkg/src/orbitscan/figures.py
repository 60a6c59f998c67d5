"""Report figures rendered to files.

Three summary plots per mission: the map with detection results, the
tracking performance over time, and the reconstructed cloud against
ground truth. Rendering is headless (Agg) and file-only; figures are
a human aid and are not part of the deterministic byte contract.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .mission import MissionReport

_DPI = 130


def plot_map_detection(report: MissionReport, path) -> None:
    """Top-down view: map points, depth-filtered survivors, clusters,
    the selected target, and the planned orbit."""
    fig, ax = plt.subplots(figsize=(7, 7))
    scene = report.scene
    ax.scatter(
        scene.positions[:, 0], scene.positions[:, 1],
        s=4, c="0.85", label="scene truth",
    )
    d = report.detection
    if d is not None:
        ax.scatter(d.map_positions[:, 0], d.map_positions[:, 1], s=4, c="0.6", label="sparse map")
        noise = d.labels < 0
        if noise.any():
            ax.scatter(
                d.filtered_positions[noise, 0], d.filtered_positions[noise, 1],
                s=12, c="k", marker="x", label="filtered, noise",
            )
        for k in range(int(d.labels.max()) + 1 if len(d.labels) else 0):
            members = d.labels == k
            ax.scatter(
                d.filtered_positions[members, 0], d.filtered_positions[members, 1],
                s=12, label=f"cluster {k}",
            )
        ax.scatter([d.target.x], [d.target.y], s=160, marker="*", c="tab:red", label="target")
    if report.plan is not None:
        angles = np.linspace(0, 2 * np.pi, 200)
        cx, cy, r = report.plan.center.x, report.plan.center.y, report.plan.radius
        ax.plot(cx + r * np.cos(angles), cy + r * np.sin(angles), "--", c="tab:blue", lw=1)
        wx = [w.pose.position.x for w in report.plan.waypoints]
        wy = [w.pose.position.y for w in report.plan.waypoints]
        ax.scatter(wx, wy, s=30, marker="s", c="tab:blue", label="waypoints")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("Sparse map and detection")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_aspect("equal")
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def plot_tracking(report: MissionReport, path) -> None:
    """Truth vs estimate trajectories and the estimation error, with
    vision dropout intervals shaded."""
    if not report.trajectory:
        return
    rows = np.array([row[:14] for row in report.trajectory], dtype=float)
    t = rows[:, 0]
    truth = rows[:, 1:5]
    est = rows[:, 5:9]
    vision = rows[:, 13]

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    ax1.plot(t, truth[:, 0], label="truth x")
    ax1.plot(t, truth[:, 1], label="truth y")
    ax1.plot(t, est[:, 0], "--", label="est x")
    ax1.plot(t, est[:, 1], "--", label="est y")
    ax1.set_ylabel("position [m]")
    ax1.legend(fontsize=8)
    ax1.set_title("Tracking")

    err = np.linalg.norm(truth[:, :3] - est[:, :3], axis=1)
    ax2.plot(t, err, c="tab:red", label="position error")
    out = vision < 0.5
    if out.any():
        ax2.fill_between(t, 0, err.max() if err.max() > 0 else 1.0, where=out,
                         color="0.85", label="vision lost")
    ax2.set_xlabel("t [s]")
    ax2.set_ylabel("error [m]")
    ax2.legend(fontsize=8)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def plot_reconstruction(report: MissionReport, path) -> None:
    """Reconstructed points beside ground truth, top and side views."""
    if report.cloud is None:
        return
    cloud = report.cloud.positions()
    scene = report.scene
    obj = scene.positions[scene.object_ids >= 0]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 5))
    for ax, (i, j), title in ((ax1, (0, 1), "top view (x, y)"), (ax2, (1, 2), "side view (y, z)")):
        ax.scatter(obj[:, i], obj[:, j], s=6, c="0.8", label="object truth")
        ax.scatter(cloud[:, i], cloud[:, j], s=6, c="tab:green", label="reconstruction")
        ax.set_title(title)
        ax.set_aspect("equal")
        ax.legend(fontsize=8)
    fig.suptitle("Dense reconstruction vs truth")
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def render_figures(report: MissionReport, out_dir) -> list[str]:
    """Render all applicable figures into a directory, returning names."""
    written = []
    targets = [
        ("map_detection.png", plot_map_detection),
        ("tracking.png", plot_tracking),
        ("reconstruction.png", plot_reconstruction),
    ]
    for name, fn in targets:
        path = os.path.join(out_dir, name)
        fn(report, path)
        if os.path.exists(path):
            written.append(name)
    return written
