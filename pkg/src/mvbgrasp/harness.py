"""Scenario-grid benchmark: both methods per cell, stage timing, aggregation, reports."""

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .collision import GripperModel, build_voxel_index
from .config import BenchConfig
from .errors import OutputError
from .geometry import make_pose, pose_inverse
from .io import atomic_write_text, write_ply
from .perception import DenoiseConfig, denoise
from .pipeline import mvbb_select, vanilla_select
from .pointcloud import PointCloud
from .scoring import ScoringConfig, transform_poses
from .synth import (
    DISTANCE_BINS,
    LATERAL_BINS,
    OBJECT_KINDS,
    PITCHES_DEG,
    feasibility_oracle,
    make_object_cloud,
    make_rng,
    make_table_patch,
    place_object,
    sample_candidates,
    scenario_grid,
)

log = logging.getLogger(__name__)

METHODS = ("Vanilla", "MvbGrasp")

EPISODE_COLUMNS = (
    "object", "distance", "lateral", "pitch_deg", "method", "success",
    "n_candidates", "n_after_filter", "filter_exhausted", "failure_reasons",
    "t_gen_synth_ms", "t_coll_ms", "t_sel_ms", "t_total_ms",
)
TIMING_COLUMNS = ("t_gen_synth_ms", "t_coll_ms", "t_sel_ms", "t_total_ms")

REFERENCE_REMOVED_FRACTION = (0.15, 0.35)


@dataclass
class EpisodeResult:
    scenario: object
    method: str
    success: bool
    n_candidates: int
    n_after_filter: int
    filter_exhausted: bool = False
    t_gen: float = 0.0
    t_coll: float = 0.0
    t_sel: float = 0.0
    t_total: float = 0.0
    failure_reasons: list = field(default_factory=list)

    @property
    def sort_key(self):
        return self.scenario.key + (METHODS.index(self.method),)

    def row(self):
        s = self.scenario
        return {
            "object": s.object_kind,
            "distance": s.distance_bin,
            "lateral": s.lateral_bin,
            "pitch_deg": s.pitch_deg,
            "method": self.method,
            "success": int(self.success),
            "n_candidates": self.n_candidates,
            "n_after_filter": self.n_after_filter,
            "filter_exhausted": int(self.filter_exhausted),
            "failure_reasons": ";".join(self.failure_reasons),
            "t_gen_synth_ms": f"{self.t_gen:.3f}",
            "t_coll_ms": f"{self.t_coll:.3f}",
            "t_sel_ms": f"{self.t_sel:.3f}",
            "t_total_ms": f"{self.t_total:.3f}",
        }


def camera_extrinsic(position, target):
    """Camera-to-base pose for a camera at ``position`` looking at ``target``
    (camera z forward, x right, y down)."""
    position = np.asarray(position, float)
    z = np.asarray(target, float) - position
    z /= np.linalg.norm(z)
    x = np.cross(z, [0.0, 0.0, 1.0])
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return make_pose(np.column_stack([x, y, z]), position)


@dataclass
class Scene:
    """Everything both methods share for one grid cell (camera frame unless noted)."""

    obj: object
    extrinsic: np.ndarray
    object_cloud: PointCloud
    scene_cloud: PointCloud
    candidates: object
    t_gen: float
    scene_cloud_base: PointCloud = None


def prepare_scene(scenario, cfg=BenchConfig()):
    t0 = time.perf_counter()
    sc = cfg.synth
    seeds = np.random.SeedSequence(scenario.seed).generate_state(3, dtype=np.uint64)
    obj = place_object(
        scenario.object_kind, sc.distances[scenario.distance_bin],
        sc.laterals[scenario.lateral_bin], scenario.pitch_deg, sc.dims,
    )
    T_bc = camera_extrinsic(sc.camera_position, sc.camera_target)
    T_cb = pose_inverse(T_bc)
    cloud = make_object_cloud(
        obj, sc.points_per_object, sc.noise_sigma, int(seeds[0]),
        view_point=sc.camera_position, backside_keep=sc.backside_keep,
    ).transformed(T_cb)

    pts = cloud.points.copy()
    rng = make_rng(int(seeds[1]))
    n_spikes = int(round(sc.outlier_fraction * len(pts)))
    if n_spikes:
        # depth spikes: push random points along their viewing ray
        idx = rng.choice(len(pts), n_spikes, replace=False)
        pts[idx] *= (1.0 + rng.uniform(0.1, 0.6, n_spikes))[:, None]
    cloud = PointCloud(pts)
    if cfg.denoise.enabled:
        d = cfg.denoise
        cloud = denoise(cloud, DenoiseConfig(tuple(d.order), d.lo_pct, d.hi_pct, d.k_neighbors,
                                             d.sigma_mult, d.radius, d.n_min))
    table = make_table_patch(obj.pose[:2, 3], sc.table_half_size, sc.table_spacing)
    table_cam = table @ T_cb[:3, :3].T + T_cb[:3, 3]
    scene_cloud = PointCloud(np.vstack([cloud.points, table_cam]))
    candidates = sample_candidates(
        cloud, sc.num_candidates, int(seeds[2]), sc.inward_weight, sc.inward_spread,
        score_noise=sc.score_noise,
    )
    t_gen = (time.perf_counter() - t0) * 1e3
    return Scene(obj, T_bc, cloud, scene_cloud, candidates, t_gen)


def _scoring_cfg(cfg):
    s = cfg.scoring
    return ScoringConfig(alpha=s.alpha, k_faces=s.k_faces, epsilon=s.epsilon)


def run_episode(scenario, method, cfg=BenchConfig(), scene=None):
    """One method on one grid cell. Pass ``scene`` to share candidates between methods."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    t_start = time.perf_counter()
    if scene is None:
        scene = prepare_scene(scenario, cfg)
    scfg = _scoring_cfg(cfg)
    n_cand = len(scene.candidates)
    if method == "Vanilla":
        sel = vanilla_select(scene.candidates, scfg)
        n_after = n_cand
    else:
        sel = mvbb_select(scene.object_cloud, scene.candidates, scfg)
        n_after = sel.n_after_filter
        if sel.exhausted:
            log.info("%s: alignment filter exhausted, falling back to score ranking", scenario.name)
    ranked = sel.ranked

    t_coll = 0.0
    reasons = []
    if cfg.collision.enabled:
        t0 = time.perf_counter()
        gripper = GripperModel.parallel_jaw()
        index = build_voxel_index(scene.scene_cloud, cfg.collision.tau)
        free = []
        for i in range(len(ranked)):
            verts = gripper.posed(ranked.poses[i])
            if not index.any_within(verts, cfg.collision.tau):
                free.append(i)
                if len(free) == cfg.scoring.top:
                    break
        t_coll = (time.perf_counter() - t0) * 1e3
        chosen = ranked.take(np.array(free, dtype=np.int64))
        if not free:
            reasons = ["collision"]
    else:
        chosen = ranked.take(np.arange(min(cfg.scoring.top, len(ranked))))

    success = False
    if len(chosen):
        base = transform_poses(chosen, scene.extrinsic)
        for pose in base.poses:
            ok, fails = feasibility_oracle(pose, scene.obj, cfg.feasibility)
            if ok:
                success, reasons = True, []
                break
            if not reasons:
                reasons = fails
    t_total = scene.t_gen + (time.perf_counter() - t_start) * 1e3
    return EpisodeResult(
        scenario, method, success, n_cand, n_after, sel.exhausted,
        t_gen=scene.t_gen, t_coll=t_coll, t_sel=sel.timings_ms["select"],
        t_total=t_total, failure_reasons=reasons,
    )


def _failed(scenario, method, n_cand=0):
    return EpisodeResult(scenario, method, False, n_cand, n_cand, failure_reasons=["internal"])


def run_scenario(scenario, cfg, dump_dir=None):
    try:
        scene = prepare_scene(scenario, cfg)
    except Exception:
        log.exception("%s: scene generation failed", scenario.name)
        return [_failed(scenario, m) for m in METHODS]
    if dump_dir is not None:
        write_ply(Path(dump_dir) / f"{scenario.name}.ply", scene.scene_cloud.transformed(scene.extrinsic))
    out = []
    for m in METHODS:
        try:
            out.append(run_episode(scenario, m, cfg, scene))
        except Exception:
            log.exception("%s/%s: episode failed", scenario.name, m)
            out.append(_failed(scenario, m, len(scene.candidates)))
    return out


def _run_scenario_star(args):
    return run_scenario(*args)


def run_benchmark(cfg=BenchConfig(), dump_dir=None):
    """All grid cells x both methods, sorted by (cell, method)."""
    cfg.validate()
    scenarios = scenario_grid(cfg.master_seed, cfg.objects)
    if dump_dir is not None:
        Path(dump_dir).mkdir(parents=True, exist_ok=True)
    tasks = [(s, cfg, dump_dir) for s in scenarios]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_scenario_star, tasks))
    else:
        chunks = [_run_scenario_star(t) for t in tasks]
    results = [r for chunk in chunks for r in chunk]
    results.sort(key=lambda r: r.sort_key)
    return results


# --------------------------------------------------------------------------
# aggregation


def percent(successes, total):
    """Percentage with one decimal, rounded half up."""
    if total == 0:
        return None
    value = Decimal(successes) * 100 / Decimal(total)
    return float(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def _stats(rows):
    n = len(rows)
    succ = sum(r.success for r in rows)
    return {
        "episodes": n,
        "successes": succ,
        "success_rate_pct": percent(succ, n),
        "mean_candidates": float(np.mean([r.n_candidates for r in rows])),
        "mean_after_filter": float(np.mean([r.n_after_filter for r in rows])),
        "filter_exhausted": sum(r.filter_exhausted for r in rows),
        "mean_t_gen_synth_ms": float(np.mean([r.t_gen for r in rows])),
        "mean_t_coll_ms": float(np.mean([r.t_coll for r in rows])),
        "mean_t_sel_ms": float(np.mean([r.t_sel for r in rows])),
        "mean_t_total_ms": float(np.mean([r.t_total for r in rows])),
    }


def _group(results, keyfn):
    groups = {}
    for r in results:
        groups.setdefault(keyfn(r), []).append(r)
    return groups


def aggregate(results):
    """Success rates, candidate counts and latencies per method, grouped by
    object, object x distance, object x pitch, and overall. Empty groups are omitted."""
    if not results:
        raise ValueError("nothing to aggregate")
    methods = [m for m in METHODS if any(r.method == m for r in results)]
    objects = [o for o in OBJECT_KINDS if any(r.scenario.object_kind == o for r in results)]

    def per_method(rows):
        g = _group(rows, lambda r: r.method)
        return {m: _stats(g[m]) for m in methods if m in g}

    report = {"overall": per_method(results), "by_object": {}, "by_object_distance": {},
              "by_object_pitch": {}}
    for o in objects:
        rows = [r for r in results if r.scenario.object_kind == o]
        report["by_object"][o] = per_method(rows)
        by_d = _group(rows, lambda r: r.scenario.distance_bin)
        report["by_object_distance"][o] = {d: per_method(by_d[d]) for d in DISTANCE_BINS if d in by_d}
        by_p = _group(rows, lambda r: r.scenario.pitch_deg)
        report["by_object_pitch"][o] = {str(p): per_method(by_p[p]) for p in PITCHES_DEG if p in by_p}

    mvb = [r for r in results if r.method == "MvbGrasp"]
    if mvb:
        total = sum(r.n_candidates for r in mvb)
        after = sum(r.n_after_filter for r in mvb)
        report["filter"] = {
            "total_candidates": total,
            "total_after_filter": after,
            "removed_fraction": (total - after) / total if total else None,
            "reference_removed_fraction_range": list(REFERENCE_REMOVED_FRACTION),
        }
    report["failure_counts"] = {}
    for m in methods:
        counts = {}
        for r in results:
            if r.method == m:
                for reason in r.failure_reasons:
                    counts[reason] = counts.get(reason, 0) + 1
        report["failure_counts"][m] = dict(sorted(counts.items()))
    return report


def heatmap(results, obj, method):
    """Distance x lateral success percentages over all pitches, or None if empty."""
    rows = [r for r in results if r.scenario.object_kind == obj and r.method == method]
    if not rows:
        return None
    grid = {}
    for d in DISTANCE_BINS:
        for lat in LATERAL_BINS:
            cell = [r for r in rows if r.scenario.distance_bin == d and r.scenario.lateral_bin == lat]
            grid[(d, lat)] = percent(sum(r.success for r in cell), len(cell))
    return grid


def episodes_csv(results):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=EPISODE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in sorted(results, key=lambda r: r.sort_key):
        w.writerow(r.row())
    return buf.getvalue()


def report_files(results):
    """File names emit_reports writes for these results."""
    names = ["episodes.csv", "summary.json"]
    for o in OBJECT_KINDS:
        for m in METHODS:
            if any(r.scenario.object_kind == o and r.method == m for r in results):
                names.append(f"heatmap_{o}_{m}.csv")
    return names


def emit_reports(report, results, out_dir, force=False):
    """Write episodes.csv, summary.json and one heatmap CSV per (object, method)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from None
    names = report_files(results)
    clash = [n for n in names if (out / n).exists()]
    if clash and not force:
        raise OutputError(f"{out}: {', '.join(clash)} already exist (use --force)")
    contents = {"episodes.csv": episodes_csv(results),
                "summary.json": json.dumps(report, indent=2) + "\n"}
    for name in names[2:]:
        _, obj_method = name[:-4].split("_", 1)
        obj, method = obj_method.rsplit("_", 1)
        grid = heatmap(results, obj, method)
        lines = ["distance," + ",".join(LATERAL_BINS)]
        for d in DISTANCE_BINS:
            vals = ["" if grid[(d, lat)] is None else f"{grid[(d, lat)]:.1f}" for lat in LATERAL_BINS]
            lines.append(d + "," + ",".join(vals))
        contents[name] = "\n".join(lines) + "\n"
    written = []
    try:
        for name in names:
            atomic_write_text(out / name, contents[name])
            written.append(out / name)
    except OSError as exc:
        raise OutputError(f"cannot write to {out}: {exc}") from None
    return written


def with_overrides(cfg, objects=None, alpha=None, k_faces=None, num_candidates=None,
                   seed=None, collision=None, workers=None):
    """Copy of ``cfg`` with CLI-style overrides applied."""
    if objects is not None:
        cfg = replace(cfg, objects=tuple(objects))
    scoring = cfg.scoring
    if alpha is not None:
        scoring = replace(scoring, alpha=alpha)
    if k_faces is not None:
        scoring = replace(scoring, k_faces=k_faces)
    cfg = replace(cfg, scoring=scoring)
    if num_candidates is not None:
        cfg = replace(cfg, synth=replace(cfg.synth, num_candidates=num_candidates))
    if seed is not None:
        cfg = replace(cfg, master_seed=seed)
    if collision:
        cfg = replace(cfg, collision=replace(cfg.collision, enabled=True))
    if workers is not None:
        cfg = replace(cfg, workers=workers)
    return cfg.validate()
