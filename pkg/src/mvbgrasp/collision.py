"""Point-proximity collision test between a posed gripper and the scene cloud."""

from dataclasses import dataclass

import numpy as np

from .errors import MvbGraspError
from .geometry import transform_points
from .neighbors import VoxelIndex, brute_sqdist
from .pointcloud import PointCloud

DEFAULT_TAU = 0.002


@dataclass(frozen=True, eq=False)
class GripperModel:
    """Collision vertices in the gripper frame (z = approach, y = finger opening)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        if len(v) == 0:
            raise MvbGraspError("gripper model needs at least one vertex")
        if not np.all(np.isfinite(v)):
            raise MvbGraspError("gripper vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def parallel_jaw(cls, opening=0.14, finger_length=0.05, palm_depth=0.03,
                     finger_width=0.02, spacing=0.005):
        """Point skeleton: two finger segments ``opening`` apart ending at the
        grasp origin (z=0), plus a palm block behind them."""
        zs = np.arange(-finger_length, 1e-12, spacing)
        xs = np.arange(-finger_width / 2, finger_width / 2 + 1e-12, spacing)
        fingers = [(x, s * opening / 2, z) for s in (-1, 1) for x in xs for z in zs]
        ys = np.arange(-opening / 2, opening / 2 + 1e-12, spacing)
        zp = np.arange(-finger_length - palm_depth, -finger_length + 1e-12, spacing)
        palm = [(x, y, z) for x in xs for y in ys for z in zp]
        return cls(np.array(fingers + palm))

    def posed(self, pose):
        return transform_points(pose, self.vertices)


def build_voxel_index(scene, cell_size=DEFAULT_TAU):
    pts = scene.points if isinstance(scene, PointCloud) else scene
    return VoxelIndex(pts, cell_size)


def check_collision(pose, gripper, scene, tau=DEFAULT_TAU, index=None, backend=None):
    """True iff some posed gripper vertex lies strictly closer than ``tau`` to a
    scene point. Pass a prebuilt ``index`` to amortise it over many poses."""
    if not tau > 0:
        raise MvbGraspError("tau must be positive")
    if index is None:
        index = build_voxel_index(scene, tau)
    return index.any_within(gripper.posed(pose), tau, backend=backend)


def check_collision_brute(pose, gripper, scene, tau=DEFAULT_TAU):
    pts = scene.points if isinstance(scene, PointCloud) else np.asarray(scene, float)
    if len(pts) == 0:
        return False
    verts = gripper.posed(pose)
    for b in range(0, len(verts), 256):
        if np.any(brute_sqdist(verts[b:b + 256], pts) < tau * tau):
            return True
    return False


def min_distance(pose, gripper, scene):
    """Smallest vertex-to-scene distance (inf for an empty scene)."""
    pts = scene.points if isinstance(scene, PointCloud) else np.asarray(scene, float)
    if len(pts) == 0:
        return float("inf")
    verts = gripper.posed(pose)
    best = np.inf
    for b in range(0, len(verts), 256):
        best = min(best, brute_sqdist(verts[b:b + 256], pts).min())
    return float(np.sqrt(best))
