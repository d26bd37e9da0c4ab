"""ASCII PLY / CSV readers and writers for clouds, depth grids and grasp files."""

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import MvbGraspError
from .pointcloud import PointCloud


def atomic_write_text(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_ply(path, cloud):
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(pts)}",
        "property double x",
        "property double y",
        "property double z",
        "end_header",
    ]
    lines.extend(f"{x!r} {y!r} {z!r}" for x, y, z in pts.tolist())
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_ply(path):
    """Read the vertex element of an ASCII PLY; only x, y, z are kept."""
    with open(path) as fh:
        if fh.readline().strip() != "ply":
            raise MvbGraspError(f"{path}: not a PLY file")
        elements = []  # (name, count, [props])
        fmt = None
        for line in fh:
            tok = line.split()
            if not tok or tok[0] in ("comment", "obj_info"):
                continue
            if tok[0] == "format":
                fmt = tok[1]
            elif tok[0] == "element":
                elements.append((tok[1], int(tok[2]), []))
            elif tok[0] == "property":
                if tok[1] == "list":
                    elements[-1][2].append(("list", tok[-1]))
                else:
                    elements[-1][2].append((tok[1], tok[-1]))
            elif tok[0] == "end_header":
                break
        if fmt != "ascii":
            raise MvbGraspError(f"{path}: only ASCII PLY is supported (got {fmt})")
        pts = None
        for name, count, props in elements:
            rows = [fh.readline().split() for _ in range(count)]
            if name != "vertex":
                continue
            names = [p[1] for p in props]
            if any(p[0] == "list" for p in props):
                raise MvbGraspError(f"{path}: list properties on vertices are unsupported")
            try:
                cols = [names.index(c) for c in ("x", "y", "z")]
            except ValueError:
                raise MvbGraspError(f"{path}: vertex element lacks x/y/z") from None
            data = np.array(rows, dtype=float).reshape(count, len(names))
            pts = data[:, cols]
        if pts is None:
            raise MvbGraspError(f"{path}: no vertex element")
    return PointCloud(pts)


def write_cloud_csv(path, cloud):
    header = "x,y,z" + (",u,v" if cloud.pixel_coords is not None else "")
    lines = [header]
    if cloud.pixel_coords is None:
        lines.extend(f"{x!r},{y!r},{z!r}" for x, y, z in cloud.points.tolist())
    else:
        for (x, y, z), (u, v) in zip(cloud.points.tolist(), cloud.pixel_coords.tolist()):
            lines.append(f"{x!r},{y!r},{z!r},{u},{v}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_cloud_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [r for r in reader if r]
    if header[:3] != ["x", "y", "z"]:
        raise MvbGraspError(f"{path}: expected header x,y,z[,u,v], got {header}")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    uv = None
    if header[3:5] == ["u", "v"]:
        uv = data[:, 3:5].astype(np.int64)
    return PointCloud(data[:, :3], uv)


def read_cloud(path):
    """Dispatch on extension: ``.ply`` or ``.csv``."""
    suffix = Path(path).suffix.lower()
    if suffix == ".ply":
        return read_ply(path)
    if suffix == ".csv":
        return read_cloud_csv(path)
    raise MvbGraspError(f"{path}: unsupported cloud format {suffix!r}")


def write_cloud(path, cloud):
    suffix = Path(path).suffix.lower()
    if suffix == ".ply":
        write_ply(path, cloud)
    elif suffix == ".csv":
        write_cloud_csv(path, cloud)
    else:
        raise MvbGraspError(f"{path}: unsupported cloud format {suffix!r}")


def read_depth_csv(path):
    """Depth grid in meters, one image row per CSV line. Empty/nan cells are invalid."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise MvbGraspError(f"{path}: ragged depth grid")
    out = np.empty((len(rows), width))
    for i, r in enumerate(rows):
        out[i] = [float(c) if c.strip() else np.nan for c in r]
    return out


def write_depth_csv(path, depth):
    lines = [",".join(repr(float(d)) for d in row) for row in np.asarray(depth, dtype=float)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_grasps_json(path):
    """``[{"pose": [16 row-major numbers], "score": s}, ...]`` -> (poses (N,4,4), scores (N,))."""
    with open(path) as fh:
        items = json.load(fh)
    if not isinstance(items, list):
        raise MvbGraspError(f"{path}: expected a JSON list of grasps")
    poses = np.empty((len(items), 4, 4))
    scores = np.empty(len(items))
    for i, item in enumerate(items):
        pose = np.asarray(item["pose"], dtype=float)
        if pose.size != 16:
            raise MvbGraspError(f"{path}: grasp {i} pose has {pose.size} values, expected 16")
        poses[i] = pose.reshape(4, 4)
        scores[i] = float(item["score"])
    return poses, scores


def write_grasps_json(path, poses, scores):
    items = [
        {"pose": [float(v) for v in np.asarray(p).reshape(16)], "score": float(s)}
        for p, s in zip(poses, scores)
    ]
    atomic_write_text(path, json.dumps(items, indent=1) + "\n")
