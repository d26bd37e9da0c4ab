"""Score normalisation, face-alignment filtering, blended re-scoring and ranking.

Candidates travel as a :class:`GraspBatch` (struct of arrays) so the N x k
alignment and the final sort stay vectorised; :meth:`GraspBatch.records`
gives per-candidate :class:`GraspCandidate` views.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import EmptyCandidatesError, EmptyFacesError, FilterExhausted, MvbGraspError
from .obb import face_normals

DEFAULT_ALPHA = 0.85
DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class ScoringConfig:
    alpha: float = DEFAULT_ALPHA
    k_faces: int = 2
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise MvbGraspError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 1 <= self.k_faces <= 6:
            raise MvbGraspError(f"k_faces must lie in [1, 6], got {self.k_faces}")
        if not self.epsilon > 0:
            raise MvbGraspError("epsilon must be positive")


@dataclass(frozen=True)
class GraspCandidate:
    pose: np.ndarray
    raw_score: float
    norm_score: float
    alignment: float
    combined: Optional[float]
    passed_filter: bool
    source_index: int

    def to_json(self):
        return {
            "source_index": self.source_index,
            "pose": [float(v) for v in self.pose.reshape(16)],
            "raw_score": self.raw_score,
            "norm_score": self.norm_score,
            "alignment": self.alignment,
            "combined": self.combined,
            "passed_filter": self.passed_filter,
        }


def _nan(n):
    return np.full(n, np.nan)


@dataclass(frozen=True, eq=False)
class GraspBatch:
    poses: np.ndarray
    raw_score: np.ndarray
    source_index: np.ndarray = None
    norm_score: np.ndarray = None
    alignment: np.ndarray = None
    combined: np.ndarray = None
    passed: np.ndarray = None

    def __post_init__(self):
        poses = np.asarray(self.poses, dtype=np.float64).reshape(-1, 4, 4)
        n = len(poses)
        raw = np.asarray(self.raw_score, dtype=np.float64).reshape(-1)
        if len(raw) != n:
            raise MvbGraspError(f"{n} poses but {len(raw)} scores")
        object.__setattr__(self, "poses", poses)
        object.__setattr__(self, "raw_score", raw)
        defaults = {
            "source_index": lambda: np.arange(n, dtype=np.int64),
            "norm_score": lambda: _nan(n),
            "alignment": lambda: _nan(n),
            "combined": lambda: _nan(n),
            "passed": lambda: np.zeros(n, dtype=bool),
        }
        for name, make in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, make())

    def __len__(self):
        return len(self.raw_score)

    @property
    def approach_axes(self):
        return self.poses[:, :3, 2]

    def take(self, idx):
        return GraspBatch(
            self.poses[idx], self.raw_score[idx], self.source_index[idx],
            self.norm_score[idx], self.alignment[idx], self.combined[idx], self.passed[idx],
        )

    def records(self):
        out = []
        for i in range(len(self)):
            comb = float(self.combined[i])
            out.append(GraspCandidate(
                pose=self.poses[i].copy(),
                raw_score=float(self.raw_score[i]),
                norm_score=float(self.norm_score[i]),
                alignment=float(self.alignment[i]),
                combined=None if np.isnan(comb) else comb,
                passed_filter=bool(self.passed[i]),
                source_index=int(self.source_index[i]),
            ))
        return out

    def __getitem__(self, i):
        return self.take(np.array([i])).records()[0]


def normalize_scores(batch, epsilon=DEFAULT_EPSILON):
    """Min-max normalisation with an epsilon-guarded denominator."""
    if len(batch) == 0:
        raise EmptyCandidatesError("no candidates to normalise")
    s = batch.raw_score
    lo, hi = s.min(), s.max()
    return replace(batch, norm_score=(s - lo) / (hi - lo + epsilon))


def approach_axis(pose):
    """Gripper approach direction: third rotation column of the pose."""
    return np.asarray(pose, dtype=float)[:3, 2]


def alignment_scores(axes, normals):
    """max over faces of <axis, -normal>, for each row of ``axes``."""
    normals = np.asarray(normals, dtype=float).reshape(-1, 3)
    if len(normals) == 0:
        raise EmptyFacesError("alignment needs at least one face")
    return (-(np.asarray(axes, dtype=float).reshape(-1, 3) @ normals.T)).max(axis=1)


def alignment_score(axis, faces):
    return float(alignment_scores(axis, face_normals(faces))[0])


def _rank_desc(key, source_index):
    return np.lexsort((source_index, -key))


def filter_and_rescore(batch, faces, cfg=ScoringConfig()):
    """Keep candidates with alignment > 0, blend, and sort survivors by the
    combined score (descending, ties by ascending source index).

    Raises :class:`FilterExhausted` carrying the scored batch when nothing passes.
    """
    if len(batch) == 0:
        raise EmptyCandidatesError("no candidates to filter")
    if np.isnan(batch.norm_score).any():
        raise MvbGraspError("normalise scores before filtering")
    a = alignment_scores(batch.approach_axes, face_normals(faces))
    passed = a > 0.0
    combined = np.where(passed, cfg.alpha * a + (1.0 - cfg.alpha) * batch.norm_score, np.nan)
    scored = replace(batch, alignment=a, combined=combined, passed=passed)
    survivors = np.nonzero(passed)[0]
    if len(survivors) == 0:
        raise FilterExhausted(scored)
    order = survivors[_rank_desc(combined[survivors], batch.source_index[survivors])]
    return scored.take(order)


def vanilla_rank(batch):
    """All candidates by descending normalised score, ties by source index."""
    if len(batch) == 0:
        raise EmptyCandidatesError("no candidates to rank")
    if np.isnan(batch.norm_score).any():
        raise MvbGraspError("normalise scores before ranking")
    return batch.take(_rank_desc(batch.norm_score, batch.source_index))


def transform_poses(batch, extrinsic):
    """Left-multiply every pose by ``extrinsic`` (e.g. camera -> base)."""
    T = np.asarray(extrinsic, dtype=float)
    return replace(batch, poses=T @ batch.poses)
