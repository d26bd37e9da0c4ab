"""End-to-end acceptance checks. Each test prints one PASS/FAIL line; run with
``pytest tests/test_acceptance.py -s`` (the lines are also shown without -s)."""

import csv
import io
import json
import time

import numpy as np
import pytest

from mvbgrasp.cli import main
from mvbgrasp.collision import GripperModel, check_collision, check_collision_brute
from mvbgrasp.errors import FilterExhausted
from mvbgrasp.geometry import frame_from_z, random_pose, random_rotation
from mvbgrasp.harness import TIMING_COLUMNS, prepare_scene
from mvbgrasp.obb import extract_faces, fit_obb, sample_covariance, select_faces
from mvbgrasp.pipeline import mvbb_select
from mvbgrasp.pointcloud import PointCloud
from mvbgrasp.scoring import (
    GraspBatch, ScoringConfig, filter_and_rescore, normalize_scores, transform_poses,
)
from mvbgrasp.synth import scenario_grid

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def _poses(axes, rng):
    axes = np.asarray(axes, float)
    axes = axes / np.linalg.norm(axes, axis=1, keepdims=True)
    P = np.tile(np.eye(4), (len(axes), 1, 1))
    P[:, :3, :3] = frame_from_z(axes, rng.standard_normal(axes.shape))
    P[:, :3, 3] = rng.uniform(-1, 1, (len(axes), 3))
    return P


def _random_cloud(rng):
    m = int(np.exp(rng.uniform(np.log(5), np.log(5000))))
    kind = rng.integers(0, 6)
    if kind == 0:
        pts = rng.standard_normal((m, 3)) * rng.uniform(1e-3, 2, 3)
    elif kind == 1:  # planar
        pts = np.column_stack([rng.standard_normal((m, 2)), np.zeros(m)])
    elif kind == 2:  # collinear
        pts = np.outer(rng.standard_normal(m), rng.standard_normal(3))
    elif kind == 3:  # two equal principal variances
        phi = rng.random(m) * 2 * np.pi
        pts = np.column_stack([np.cos(phi), np.sin(phi), 3 * rng.random(m)])
    elif kind == 4:  # isotropic-ish
        pts = rng.standard_normal((m, 3))
    else:  # duplicated points plus a few distinct
        base = rng.standard_normal((3, 3))
        pts = base[rng.integers(0, 3, m)]
    return pts @ random_rotation(rng).T + rng.uniform(-10, 10, 3)


def test_1_obb_property_suite(verdict):
    rng = np.random.default_rng(2024)
    fit_obb(PointCloud(rng.random((10, 3))))  # compile outside the timed loop
    worst = {"contain": 0.0, "tight": 0.0, "ortho": 0.0, "det": 0.0, "resid": 0.0}
    failures = 0
    t0 = time.perf_counter()
    n_clouds = 10_000
    for _ in range(n_clouds):
        pts = _random_cloud(rng)
        obb = fit_obb(PointCloud(pts))
        R = obb.rotation
        half = obb.extents / 2
        local = obb.to_local(pts)
        contain = max(0.0, float((np.abs(local) - half).max()))
        tight = float(max(np.abs(local.min(axis=0) + half).max(), np.abs(local.max(axis=0) - half).max()))
        ortho = float(np.abs(R.T @ R - np.eye(3)).max())
        det = abs(float(np.linalg.det(R)) - 1.0)
        _, _, cov = sample_covariance(pts)
        lam = np.diag(R.T @ cov @ R)
        resid = float(np.abs(cov @ R - R * lam).max())
        tr = float(np.trace(cov))
        ok = contain <= 1e-6 and tight <= 1e-9 and ortho <= 1e-9 and det <= 1e-9 and resid <= 1e-8 * tr
        failures += not ok
        for k, v in zip(worst, (contain, tight, ortho, det, resid / tr if tr > 0 else 0.0)):
            worst[k] = max(worst[k], v)
    dt = time.perf_counter() - t0
    detail = (f"{n_clouds} clouds in {dt:.1f} s, {failures} violations; worst "
              + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    verdict(1, failures == 0 and dt < 60, detail)


def test_2_filter_exactness(verdict):
    rng = np.random.default_rng(7)
    cfg = ScoringConfig()
    bad = 0
    for _ in range(1000):
        pts = rng.standard_normal((int(rng.integers(5, 300)), 3)) * rng.uniform(0.01, 0.2, 3)
        pts = pts @ random_rotation(rng).T + rng.uniform(-1, 1, 3)
        k = int(rng.integers(1, 7))
        faces = select_faces(extract_faces(fit_obb(PointCloud(pts))), k, origin=rng.uniform(-2, 2, 3))
        n = int(rng.integers(1, 200))
        axes = rng.standard_normal((n, 3))
        raw = rng.random(n)
        if rng.random() < 0.3:
            raw = np.round(raw, 1)  # force score ties
        batch = normalize_scores(GraspBatch(_poses(axes, rng), raw))
        z = batch.approach_axes
        normals = [f.normal for f in faces]
        a = [max(-float(z[j] @ nv) for nv in normals) for j in range(n)]
        keep = [j for j in range(n) if a[j] > 0]
        comb = {j: cfg.alpha * a[j] + (1 - cfg.alpha) * batch.norm_score[j] for j in keep}
        expected = sorted(keep, key=lambda j: (-comb[j], j))
        try:
            got = filter_and_rescore(batch, faces, cfg).source_index.tolist()
        except FilterExhausted:
            got = []
        bad += got != expected
    verdict(2, bad == 0, f"1000 triples, {bad} mismatches in survivor set or order")


def test_3_hemisphere_union(verdict):
    rng = np.random.default_rng(11)
    pts = rng.standard_normal((500, 3)) * [0.1, 0.05, 0.02]
    pts = pts @ random_rotation(rng).T
    faces = select_faces(extract_faces(fit_obb(PointCloud(pts))), 2, origin=(1.0, 2.0, 3.0))
    assert abs(faces[0].normal @ faces[1].normal) < 1e-9
    n = 100_000
    batch = normalize_scores(GraspBatch(_poses(rng.standard_normal((n, 3)), rng), rng.random(n)))
    frac = len(filter_and_rescore(batch, faces)) / n
    verdict(3, abs(frac - 0.75) <= 0.02, f"survivor fraction {frac:.4f} at {n} samples (target 0.75 +/- 0.02)")


def test_4_collision_oracle(verdict):
    rng = np.random.default_rng(3)
    taus = (0.001, 0.002, 0.005, 0.01, 0.02)
    mismatches = nonmono = hits = 0
    n_cfg = 250
    for i in range(n_cfg):
        scene = PointCloud(rng.random((int(rng.integers(0, 3000)), 3)) * 0.3)
        if i % 2:
            g = GripperModel.parallel_jaw()
        else:
            g = GripperModel(rng.uniform(-0.05, 0.05, (int(rng.integers(1, 200)), 3)))
        pose = random_pose(rng, 0.3)
        pose[:3, 3] += 0.15
        verdicts = []
        for tau in taus:
            fast = check_collision(pose, g, scene, tau)
            mismatches += fast != check_collision_brute(pose, g, scene, tau)
            verdicts.append(fast)
        hits += verdicts[-1]
        nonmono += verdicts != sorted(verdicts)
    ok = mismatches == 0 and nonmono == 0
    verdict(4, ok, f"{n_cfg} configurations x {len(taus)} tau: {mismatches} mismatches, "
                   f"{nonmono} monotonicity violations ({hits} colliding at the largest tau)")


def test_5_selection_latency(verdict):
    scenes = [prepare_scene(s) for s in scenario_grid()[::3]]
    cfg = ScoringConfig(k_faces=2)
    mvbb_select(scenes[0].object_cloud, scenes[0].candidates, cfg)  # warm up
    times = []
    for sc in scenes:
        assert len(sc.candidates) == 800
        for _ in range(5):
            sel = mvbb_select(sc.object_cloud, sc.candidates, cfg)
            times.append(sel.timings_ms["select"])
    mean = float(np.mean(times))
    verdict(5, mean < 10.0, f"mean selection latency {mean:.3f} ms over {len(times)} runs "
                            f"(N=800, k=2; reference 6.78 ms)")


def _strip_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in rows]


def _strip_summary(obj):
    if isinstance(obj, dict):
        return {k: _strip_summary(v) for k, v in obj.items() if not k.startswith("mean_t_")}
    return obj


def _run_bench(out):
    t0 = time.perf_counter()
    assert main(["bench", "--out", str(out)]) == 0
    return time.perf_counter() - t0


@pytest.fixture(scope="module")
def bench_runs(tmp_path_factory):
    a = tmp_path_factory.mktemp("bench_a")
    b = tmp_path_factory.mktemp("bench_b")
    return a, _run_bench(a), b, _run_bench(b)


def test_6_benchmark_structure(verdict, bench_runs):
    a, dt_a, b, dt_b = bench_runs
    rows = list(csv.DictReader(io.StringIO((a / "episodes.csv").read_text())))
    problems = []
    if len(rows) != 162:
        problems.append(f"{len(rows)} rows")
    for o in ("cylinder", "box_asym", "bottle"):
        for m in ("Vanilla", "MvbGrasp"):
            c = sum(r["object"] == o and r["method"] == m for r in rows)
            if c != 27:
                problems.append(f"{o}/{m}: {c} episodes")
    for v, m in zip(rows[0::2], rows[1::2]):
        if v["n_candidates"] != m["n_candidates"]:
            problems.append("unpaired n_candidates")
    if _strip_csv((a / "episodes.csv").read_text()) != _strip_csv((b / "episodes.csv").read_text()):
        problems.append("episodes differ between runs")
    sa = json.loads((a / "summary.json").read_text())
    sb = json.loads((b / "summary.json").read_text())
    if _strip_summary(sa) != _strip_summary(sb):
        problems.append("summary differs between runs")
    for p in sorted(a.glob("heatmap_*.csv")):
        if p.read_bytes() != (b / p.name).read_bytes():
            problems.append(f"{p.name} differs")
    if max(dt_a, dt_b) >= 300:
        problems.append("too slow")
    detail = (f"{len(rows)} rows, runs took {dt_a:.1f} s and {dt_b:.1f} s; "
              + ("; ".join(problems) if problems else "structure and determinism hold"))
    verdict(6, not problems, detail)


def test_7_directional_result(verdict, bench_runs):
    a = bench_runs[0]
    s = json.loads((a / "summary.json").read_text())
    van = s["overall"]["Vanilla"]["success_rate_pct"]
    mvb = s["overall"]["MvbGrasp"]["success_rate_pct"]
    removed = s["filter"]["removed_fraction"]
    lo, hi = s["filter"]["reference_removed_fraction_range"]
    verdict(7, mvb >= van, f"MvbGrasp {mvb:.1f}% vs Vanilla {van:.1f}%; filter removed "
                           f"{100 * removed:.1f}% of candidates (reference range {100 * lo:.0f}-{100 * hi:.0f}%)")


def test_8_rigid_invariance(verdict):
    rng = np.random.default_rng(99)
    bad = []
    for i in range(100):
        pts = rng.standard_normal((int(rng.integers(50, 500)), 3)) * [0.08, 0.04, 0.015]
        pts = pts @ random_rotation(rng).T + [0.0, 0.0, 0.5]
        n = 200
        batch = GraspBatch(_poses(rng.standard_normal((n, 3)), rng), rng.random(n))
        origin = np.zeros(3)
        T = random_pose(rng, 2.0)
        s0 = mvbb_select(PointCloud(pts), batch, origin=origin)
        s1 = mvbb_select(PointCloud(pts @ T[:3, :3].T + T[:3, 3]), transform_poses(batch, T),
                         origin=T[:3, :3] @ origin + T[:3, 3])
        same_order = np.array_equal(s0.ranked.source_index, s1.ranked.source_index)
        da = float(np.abs(s0.ranked.alignment - s1.ranked.alignment).max())
        if not same_order or s0.exhausted != s1.exhausted or da > 1e-9:
            bad.append((i, same_order, da))
    verdict(8, not bad, f"100 joint transforms, {len(bad)} disagreements {bad[:3]}")
