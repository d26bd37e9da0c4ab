"""Command-line entry point: ``mvbgrasp {backproject,fit-obb,filter,collide,bench}``."""

import argparse
import json
import logging
import sys
import time

import numpy as np

from . import _accel
from .collision import DEFAULT_TAU, GripperModel, check_collision, min_distance
from .config import BenchConfig, load_config
from .errors import MvbGraspError
from .harness import aggregate, emit_reports, run_benchmark, with_overrides
from .io import read_cloud, read_depth_csv, read_grasps_json, write_cloud
from .obb import fit_obb
from .perception import CameraIntrinsics, PixelBox, back_project, segment_by_box
from .pipeline import mvbb_select
from .scoring import GraspBatch, ScoringConfig

log = logging.getLogger("mvbgrasp")


def _vec3(text):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("expected x,y,z")
    return vals


def _emit(obj, out):
    text = json.dumps(obj, indent=2) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def cmd_backproject(args):
    depth = read_depth_csv(args.depth)
    h, w = depth.shape
    intr = CameraIntrinsics(args.fx, args.fy, args.cx, args.cy, w, h, args.d_max)
    cloud = back_project(depth, intr)
    if args.box:
        x1, y1, x2, y2 = (int(v) for v in args.box.split(","))
        cloud = segment_by_box(cloud, PixelBox(x1, y1, x2, y2))
    write_cloud(args.out, cloud)
    log.info("wrote %d points to %s", len(cloud), args.out)


def cmd_fit_obb(args):
    obb = fit_obb(read_cloud(args.cloud))
    _emit(obb.to_json(), args.out)


def cmd_filter(args):
    cloud = read_cloud(args.cloud)
    poses, scores = read_grasps_json(args.grasps)
    cfg = ScoringConfig(alpha=args.alpha, k_faces=args.k_faces)
    sel = mvbb_select(cloud, GraspBatch(poses, scores), cfg, origin=args.origin)
    top = sel.ranked.take(np.arange(min(args.top, len(sel.ranked))))
    _emit({
        "filter_exhausted": sel.exhausted,
        "n_candidates": len(poses),
        "n_after_filter": sel.n_after_filter,
        "alpha": cfg.alpha,
        "k_faces": cfg.k_faces,
        "obb": sel.obb.to_json(),
        "selected_faces": [f.to_json() for f in sel.faces],
        "timing_ms": sel.timings_ms,
        "grasps": [c.to_json() for c in top.records()],
    }, args.out)


def cmd_collide(args):
    scene = read_cloud(args.cloud)
    gripper = GripperModel(read_cloud(args.gripper).points) if args.gripper else GripperModel.parallel_jaw()
    with open(args.pose) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data["pose"]
    pose = np.asarray(data, dtype=float).reshape(4, 4)
    t0 = time.perf_counter()
    hit = check_collision(pose, gripper, scene, args.tau)
    t_ms = (time.perf_counter() - t0) * 1e3
    _emit({
        "collision": bool(hit),
        "min_distance": min_distance(pose, gripper, scene),
        "tau": args.tau,
        "n_vertices": len(gripper.vertices),
        "n_scene_points": len(scene),
        "t_check_ms": t_ms,
    }, args.out)


def cmd_bench(args):
    cfg = load_config(args.config) if args.config else BenchConfig()
    objects = args.objects.split(",") if args.objects else None
    cfg = with_overrides(cfg, objects=objects, alpha=args.alpha, k_faces=args.k_faces,
                         num_candidates=args.num_candidates, seed=args.seed,
                         collision=args.collision, workers=args.workers)
    t0 = time.perf_counter()
    dump = f"{args.out}/scenes" if args.dump_scenes else None
    results = run_benchmark(cfg, dump_dir=dump)
    report = aggregate(results)
    report["config"] = cfg.to_dict()
    report["backend"] = _accel.backend_name()
    paths = emit_reports(report, results, args.out, force=args.force)
    elapsed = time.perf_counter() - t0
    for method, stats in report["overall"].items():
        log.info("%-8s success %5.1f%%  mean #after %.1f  mean t_sel %.3f ms",
                 method, stats["success_rate_pct"], stats["mean_after_filter"], stats["mean_t_sel_ms"])
    if "filter" in report:
        log.info("alignment filter removed %.1f%% of candidates",
                 100 * report["filter"]["removed_fraction"])
    log.info("%d episodes in %.1f s -> %d files in %s", len(results), elapsed, len(paths), args.out)


def build_parser():
    p = argparse.ArgumentParser(prog="mvbgrasp", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("backproject", help="depth CSV -> point cloud (optionally box-segmented)")
    s.add_argument("depth")
    s.add_argument("--fx", type=float, required=True)
    s.add_argument("--fy", type=float, required=True)
    s.add_argument("--cx", type=float, required=True)
    s.add_argument("--cy", type=float, required=True)
    s.add_argument("--d-max", type=float, default=1.0)
    s.add_argument("--box", help="x1,y1,x2,y2 inclusive pixel bounds")
    s.add_argument("--out", required=True, help=".ply or .csv")
    s.set_defaults(func=cmd_backproject)

    s = sub.add_parser("fit-obb", help="fit an oriented bounding box to a cloud")
    s.add_argument("cloud")
    s.add_argument("--out", help="JSON output path (default stdout)")
    s.set_defaults(func=cmd_fit_obb)

    s = sub.add_parser("filter", help="filter and re-rank grasp candidates against a cloud")
    s.add_argument("cloud")
    s.add_argument("grasps", help='JSON list of {"pose": [16 row-major], "score": s}')
    s.add_argument("--alpha", type=float, default=0.85)
    s.add_argument("--k-faces", type=int, default=2)
    s.add_argument("--top", type=int, default=1)
    s.add_argument("--origin", type=_vec3, default=[0.0, 0.0, 0.0],
                   help="face-selection origin x,y,z in the cloud frame")
    s.add_argument("--out")
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("collide", help="gripper-vs-scene proximity check for one pose")
    s.add_argument("cloud")
    s.add_argument("--pose", required=True, help="JSON: 16 row-major numbers or {\"pose\": [...]}")
    s.add_argument("--gripper", help="gripper vertices (PLY/CSV); default parallel-jaw skeleton")
    s.add_argument("--tau", type=float, default=DEFAULT_TAU)
    s.add_argument("--out")
    s.set_defaults(func=cmd_collide)

    s = sub.add_parser("bench", help="run both methods over the scenario grid")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--objects", help="comma list from cylinder,box_asym,bottle")
    s.add_argument("--alpha", type=float)
    s.add_argument("--k-faces", type=int)
    s.add_argument("--num-candidates", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--collision", action="store_true")
    s.add_argument("--workers", type=int)
    s.add_argument("--dump-scenes", action="store_true")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (MvbGraspError, OSError, KeyError, ValueError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
