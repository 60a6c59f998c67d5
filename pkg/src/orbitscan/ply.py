"""Minimal ASCII PLY point cloud I/O.

Writes version 1.0 ASCII files with a single vertex element carrying
float x, y, z properties. Coordinates are formatted with 9 significant
digits so identical clouds always produce identical bytes. The reader
accepts any ASCII PLY whose vertex element contains x, y, z
properties, ignoring other elements and properties.
"""

from __future__ import annotations

import numpy as np

from .errors import IoFailure


def write_ply(path, positions) -> None:
    """Write an (n, 3) array of points as an ASCII PLY file."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 3)
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("ply\n")
            fh.write("format ascii 1.0\n")
            fh.write(f"element vertex {len(pts)}\n")
            fh.write("property float x\n")
            fh.write("property float y\n")
            fh.write("property float z\n")
            fh.write("end_header\n")
            for x, y, z in pts:
                fh.write(f"{x:.9g} {y:.9g} {z:.9g}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write PLY to {path}: {exc}") from exc


def read_ply(path) -> np.ndarray:
    """Read vertex x, y, z coordinates from an ASCII PLY file."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise IoFailure(f"cannot read PLY from {path}: {exc}") from exc

    if not lines or lines[0].strip() != "ply":
        raise IoFailure(f"{path}: not a PLY file")

    vertex_count = None
    properties: list[str] = []
    in_vertex_element = False
    body_start = None
    for i, line in enumerate(lines[1:], start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "format":
            if tokens[1] != "ascii":
                raise IoFailure(f"{path}: only ascii PLY is supported, got {tokens[1]}")
        elif tokens[0] == "element":
            in_vertex_element = tokens[1] == "vertex"
            if in_vertex_element:
                vertex_count = int(tokens[2])
        elif tokens[0] == "property" and in_vertex_element:
            properties.append(tokens[-1])
        elif tokens[0] == "end_header":
            body_start = i + 1
            break
    if vertex_count is None or body_start is None:
        raise IoFailure(f"{path}: missing vertex element or end_header")
    try:
        idx = [properties.index(axis) for axis in ("x", "y", "z")]
    except ValueError:
        raise IoFailure(f"{path}: vertex element lacks x, y, z properties") from None

    rows = []
    for line_no in range(body_start, body_start + vertex_count):
        try:
            tokens = lines[line_no].split()
            rows.append([float(tokens[j]) for j in idx])
        except (IndexError, ValueError) as exc:
            raise IoFailure(f"{path}:{line_no + 1}: malformed vertex line") from exc
    return np.array(rows, dtype=float).reshape(-1, 3)
