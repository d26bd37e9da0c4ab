"""End-to-end selection for the two methods, with per-stage wall-clock timing."""

import time
from dataclasses import dataclass, field

from .errors import FilterExhausted
from .obb import extract_faces, fit_obb, select_faces
from .scoring import GraspBatch, ScoringConfig, filter_and_rescore, normalize_scores, vanilla_rank


def _ms(t0):
    return (time.perf_counter() - t0) * 1e3


@dataclass
class Selection:
    ranked: GraspBatch
    exhausted: bool = False
    obb: object = None
    faces: list = field(default_factory=list)
    scored: GraspBatch = None
    timings_ms: dict = field(default_factory=dict)

    @property
    def n_after_filter(self):
        return 0 if self.exhausted else len(self.ranked)


def vanilla_select(batch, cfg=ScoringConfig()):
    t0 = time.perf_counter()
    ranked = vanilla_rank(normalize_scores(batch, cfg.epsilon))
    return Selection(ranked, timings_ms={"select": _ms(t0)})


def mvbb_select(cloud, batch, cfg=ScoringConfig(), origin=(0.0, 0.0, 0.0), backend=None):
    """normalise -> fit OBB -> six faces -> k nearest -> filter -> blend -> sort.

    On filter exhaustion the selection falls back to score-only ranking and
    sets ``exhausted``.
    """
    timings = {}
    t_all = t0 = time.perf_counter()
    normed = normalize_scores(batch, cfg.epsilon)
    timings["normalize"] = _ms(t0)
    t0 = time.perf_counter()
    obb = fit_obb(cloud, backend=backend)
    timings["obb"] = _ms(t0)
    t0 = time.perf_counter()
    faces = select_faces(extract_faces(obb), cfg.k_faces, origin)
    timings["faces"] = _ms(t0)
    t0 = time.perf_counter()
    exhausted = False
    try:
        ranked = filter_and_rescore(normed, faces, cfg)
        scored = None
    except FilterExhausted as exc:
        exhausted = True
        scored = exc.scored
        ranked = vanilla_rank(scored)
    timings["filter"] = _ms(t0)
    timings["select"] = _ms(t_all)
    return Selection(ranked, exhausted, obb, faces, scored, timings)
