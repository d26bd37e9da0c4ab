from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError, MvbGraspError


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Points in meters, (M, 3) float64, with optional (M, 2) integer pixel
    coordinates (u, v) recording where each point came from."""

    points: np.ndarray
    pixel_coords: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise MvbGraspError("point cloud contains non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.pixel_coords is not None:
            uv = np.asarray(self.pixel_coords, dtype=np.int64).reshape(-1, 2)
            if len(uv) != len(pts):
                raise DimensionMismatchError(
                    f"pixel_coords has {len(uv)} rows for {len(pts)} points"
                )
            uv.setflags(write=False)
            object.__setattr__(self, "pixel_coords", uv)

    def __len__(self):
        return len(self.points)

    def subset(self, mask_or_index):
        """Survivors of a boolean mask (or index array), original order kept."""
        uv = None if self.pixel_coords is None else self.pixel_coords[mask_or_index]
        return PointCloud(self.points[mask_or_index], uv)

    def transformed(self, T):
        return PointCloud(self.points @ T[:3, :3].T + T[:3, 3], self.pixel_coords)

    def equals(self, other):
        if not np.array_equal(self.points, other.points):
            return False
        if (self.pixel_coords is None) != (other.pixel_coords is None):
            return False
        return self.pixel_coords is None or np.array_equal(self.pixel_coords, other.pixel_coords)
