import numpy as np
import pytest
from hypothesis import given, strategies as st

from mvbgrasp.collision import (
    GripperModel, build_voxel_index, check_collision, check_collision_brute, min_distance,
)
from mvbgrasp.errors import MvbGraspError
from mvbgrasp.geometry import make_pose, random_pose
from mvbgrasp.pointcloud import PointCloud

ONE = GripperModel([[0.0, 0.0, 0.0]])


def test_coincident_vertex_collides(backend):
    scene = PointCloud([[0.1, 0.2, 0.3], [1, 1, 1]])
    pose = make_pose(np.eye(3), [0.1, 0.2, 0.3])
    assert check_collision(pose, ONE, scene, 0.002, backend=backend)


def test_three_mm_is_clear(backend):
    scene = PointCloud([[0.003, 0.0, 0.0]])
    assert not check_collision(np.eye(4), ONE, scene, 0.002, backend=backend)
    assert min_distance(np.eye(4), ONE, scene) == pytest.approx(0.003)
    assert check_collision(np.eye(4), ONE, scene, 0.0031, backend=backend)


def test_empty_scene(backend):
    scene = PointCloud(np.zeros((0, 3)))
    assert not check_collision(np.eye(4), GripperModel.parallel_jaw(), scene, backend=backend)
    assert min_distance(np.eye(4), ONE, scene) == float("inf")


def test_bad_inputs():
    with pytest.raises(MvbGraspError):
        check_collision(np.eye(4), ONE, PointCloud([[0, 0, 0]]), 0.0)
    with pytest.raises(MvbGraspError):
        GripperModel(np.zeros((0, 3)))


def test_parallel_jaw_shape():
    v = GripperModel.parallel_jaw().vertices
    assert np.all(v[:, 2] <= 1e-12)
    assert np.isclose(np.abs(v[:, 1]).max(), 0.07)
    # fingers are the only vertices at the grasp origin plane
    tip = v[np.isclose(v[:, 2], 0.0)]
    assert np.allclose(np.abs(tip[:, 1]), 0.07)


def test_shared_index_matches_fresh():
    rng = np.random.default_rng(0)
    scene = PointCloud(rng.random((2000, 3)) * 0.2)
    idx = build_voxel_index(scene, 0.004)
    g = GripperModel.parallel_jaw()
    for _ in range(30):
        T = make_pose(np.eye(3), rng.random(3) * 0.2)
        assert check_collision(T, g, scene, 0.004, index=idx) == check_collision(T, g, scene, 0.004)


@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 0.02))
def test_matches_brute_oracle(seed, tau):
    rng = np.random.default_rng(seed)
    scene = PointCloud(rng.random((int(rng.integers(1, 800)), 3)) * 0.3)
    g = GripperModel.parallel_jaw()
    T = random_pose(rng, 0.3)
    assert check_collision(T, g, scene, tau) == check_collision_brute(T, g, scene, tau)
    assert check_collision(T, g, scene, tau) == (min_distance(T, g, scene) < tau)


@given(st.integers(0, 2**32 - 1))
def test_tau_monotone(seed):
    rng = np.random.default_rng(seed)
    scene = PointCloud(rng.random((500, 3)) * 0.3)
    g = GripperModel.parallel_jaw()
    T = random_pose(rng, 0.3)
    verdicts = [check_collision(T, g, scene, tau) for tau in (0.001, 0.002, 0.005, 0.01, 0.03)]
    assert verdicts == sorted(verdicts)


@given(st.integers(0, 2**32 - 1))
def test_rigid_invariance(seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((400, 3)) * 0.3
    g = GripperModel.parallel_jaw()
    P, T = random_pose(rng, 0.3), random_pose(rng)
    a = min_distance(P, g, PointCloud(pts))
    b = min_distance(T @ P, g, PointCloud(pts @ T[:3, :3].T + T[:3, 3]))
    assert abs(a - b) < 1e-9
    if abs(a - 0.01) > 1e-9:
        assert check_collision(P, g, PointCloud(pts), 0.01) == \
            check_collision(T @ P, g, PointCloud(pts @ T[:3, :3].T + T[:3, 3]), 0.01)
