"""Depth back-projection, box segmentation and the three cloud denoisers."""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyCloudError,
    MissingPixelCoordsError,
    MvbGraspError,
    TooFewPointsError,
)
from .neighbors import VoxelIndex, knn_cell_size
from .pointcloud import PointCloud


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    d_max: float = 1.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise MvbGraspError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise MvbGraspError("principal point outside the image")
        if not self.d_max > 0:
            raise MvbGraspError("d_max must be positive")


@dataclass(frozen=True)
class PixelBox:
    """Inclusive pixel bounds of a detection."""

    x1: int
    y1: int
    x2: int
    y2: int
    confidence: float = 1.0

    def __post_init__(self):
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise MvbGraspError(f"inverted box {self}")
        if not 0.0 <= self.confidence <= 1.0:
            raise MvbGraspError("confidence must lie in [0, 1]")


def back_project(depth, intr):
    """Pinhole back-projection of every pixel with depth in (0, d_max].

    Points come out row-major (v outer, u inner) with their (u, v) attached.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != (intr.height, intr.width):
        raise DimensionMismatchError(
            f"depth is {depth.shape}, intrinsics expect {(intr.height, intr.width)}"
        )
    with np.errstate(invalid="ignore"):
        valid = np.isfinite(depth) & (depth > 0) & (depth <= intr.d_max)
    v, u = np.nonzero(valid)
    d = depth[v, u]
    x = (u - intr.cx) * d / intr.fx
    y = (v - intr.cy) * d / intr.fy
    return PointCloud(np.column_stack([x, y, d]), np.column_stack([u, v]))


def segment_by_box(cloud, box):
    if cloud.pixel_coords is None:
        raise MissingPixelCoordsError("segmentation needs pixel coordinates")
    u, v = cloud.pixel_coords[:, 0], cloud.pixel_coords[:, 1]
    inside = (u >= box.x1) & (u <= box.x2) & (v >= box.y1) & (v <= box.y2)
    return cloud.subset(inside)


def nearest_rank(sorted_values, fraction):
    """Value at 0-based rank round_half_up(fraction * (n - 1)); no interpolation."""
    n = len(sorted_values)
    return sorted_values[int(np.floor(fraction * (n - 1) + 0.5))]


def clip_depth_percentile(cloud, lo_pct=0.01, hi_pct=0.99):
    if not 0.0 <= lo_pct < hi_pct <= 1.0:
        raise MvbGraspError(f"need 0 <= lo < hi <= 1, got [{lo_pct}, {hi_pct}]")
    if len(cloud) == 0:
        raise EmptyCloudError("cannot clip an empty cloud")
    z = cloud.points[:, 2]
    zs = np.sort(z)
    lo, hi = nearest_rank(zs, lo_pct), nearest_rank(zs, hi_pct)
    return cloud.subset((z >= lo) & (z <= hi))


def remove_statistical_outliers(cloud, k_neighbors=20, sigma_mult=2.0, backend=None):
    """Drop points whose mean k-NN distance exceeds mean + sigma_mult * std
    (population std) of that statistic over the cloud."""
    n = len(cloud)
    if n <= k_neighbors:
        raise TooFewPointsError(f"{n} points, need more than k={k_neighbors}")
    pts = cloud.points
    index = VoxelIndex(pts, knn_cell_size(pts, k_neighbors))
    mean_d = index.knn_mean_distance(k_neighbors, backend=backend)
    mu = mean_d.mean()
    sigma = mean_d.std()
    threshold = mu + sigma_mult * sigma
    # zero-spread statistics differ only by summation rounding
    tol = 1e-12 * max(abs(threshold), 1e-300)
    return cloud.subset(mean_d <= threshold + tol)


def remove_radius_outliers(cloud, radius=0.01, n_min=5, backend=None):
    """Drop points with fewer than ``n_min`` other points within ``radius``."""
    if not radius > 0:
        raise MvbGraspError("radius must be positive")
    if n_min <= 0 or len(cloud) == 0:
        return cloud
    index = VoxelIndex(cloud.points, radius)
    counts = index.count_within(
        cloud.points, radius, self_index=np.arange(len(cloud)), backend=backend
    )
    return cloud.subset(counts >= n_min)


DEFAULT_FILTER_ORDER = ("percentile", "statistical", "radius")


@dataclass(frozen=True)
class DenoiseConfig:
    order: tuple = DEFAULT_FILTER_ORDER
    lo_pct: float = 0.01
    hi_pct: float = 0.99
    k_neighbors: int = 20
    sigma_mult: float = 2.0
    radius: float = 0.01
    n_min: int = 5


def denoise(cloud, cfg=DenoiseConfig(), backend=None):
    """Apply the configured filters in ``cfg.order``. Filters whose
    preconditions fail on a tiny cloud are skipped rather than raising."""
    for name in cfg.order:
        if name == "percentile":
            if len(cloud):
                cloud = clip_depth_percentile(cloud, cfg.lo_pct, cfg.hi_pct)
        elif name == "statistical":
            if len(cloud) > cfg.k_neighbors:
                cloud = remove_statistical_outliers(cloud, cfg.k_neighbors, cfg.sigma_mult, backend)
        elif name == "radius":
            cloud = remove_radius_outliers(cloud, cfg.radius, cfg.n_min, backend)
        else:
            raise MvbGraspError(f"unknown filter {name!r}")
    return cloud
