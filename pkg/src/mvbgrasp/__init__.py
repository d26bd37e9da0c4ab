"""Oriented-bounding-box face-alignment filtering and re-scoring of 6-DoF grasps."""

from ._accel import USE_NUMBA, backend_name
from .collision import GripperModel, build_voxel_index, check_collision
from .errors import FilterExhausted, MvbGraspError
from .obb import Face, Obb, extract_faces, fit_obb, select_faces
from .perception import (
    CameraIntrinsics,
    PixelBox,
    back_project,
    clip_depth_percentile,
    remove_radius_outliers,
    remove_statistical_outliers,
    segment_by_box,
)
from .pipeline import mvbb_select, vanilla_select
from .pointcloud import PointCloud
from .scoring import (
    GraspBatch,
    GraspCandidate,
    ScoringConfig,
    alignment_score,
    approach_axis,
    filter_and_rescore,
    normalize_scores,
    transform_poses,
    vanilla_rank,
)

__version__ = "0.1.0"
