"""Time the numba kernels against their pure-numpy counterparts.

    python3 benchmarks/bench_backends.py [--points 20000] [--repeat 5]

Both backends run in the same process through the ``backend=`` argument, so
numba must be importable. Results are checked for agreement before timing.
fit_obb is mostly numpy matrix work around a tiny 3x3 solve, so expect parity there.
"""

import argparse
import time

import numpy as np

from mvbgrasp import _accel
from mvbgrasp.collision import GripperModel, build_voxel_index
from mvbgrasp.geometry import random_pose
from mvbgrasp.neighbors import VoxelIndex, knn_cell_size
from mvbgrasp.obb import fit_obb, jacobi_eigh
from mvbgrasp.pointcloud import PointCloud
from mvbgrasp.synth import ObjectSpec, make_object_cloud


def best_of(fn, repeat):
    fn()  # warm-up (and numba compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times) * 1e3


def cases(n_points, rng):
    # object-surface cloud, the shape the denoising filters actually see
    pts = make_object_cloud(ObjectSpec("bottle"), n_points, 0.001, rng_seed=int(rng.integers(2**31))).points
    mats = [B @ B.T for B in rng.standard_normal((500, 3, 3))]
    cell = knn_cell_size(pts, 20)
    knn_index = VoxelIndex(pts, cell)
    r_index = VoxelIndex(pts, 0.01)
    scene = rng.random((n_points, 3)) * 0.3
    coll_index = build_voxel_index(scene, 0.002)
    verts = [GripperModel.parallel_jaw().posed(random_pose(rng, 0.15))
             for _ in range(50)]
    for v in verts:
        v += 0.15
    cloud = PointCloud(pts)
    return {
        "jacobi x500": lambda b: [jacobi_eigh(m, backend=b) for m in mats],
        "knn mean (k=20)": lambda b: knn_index.knn_mean_distance(20, backend=b),
        "count_within (r=1cm)": lambda b: r_index.count_within(pts, 0.01, self_index=np.arange(len(pts)), backend=b),
        "any_within x50 poses": lambda b: [coll_index.any_within(v, 0.002, backend=b) for v in verts],
        "fit_obb": lambda b: fit_obb(cloud, backend=b),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not available (or MVBGRASP_NUMBA=0); nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<24}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, fn in cases(args.points, rng).items():
        a, b = fn("numpy"), fn("numba")
        if isinstance(a, np.ndarray):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        print(f"{name:<24}{t_np:>12.3f}{t_nb:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
