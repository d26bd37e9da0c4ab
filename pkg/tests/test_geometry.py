import numpy as np
from hypothesis import given, strategies as st

from mvbgrasp.geometry import (
    frame_from_z, is_rotation, make_pose, pose_inverse, random_pose, random_rotation,
    rot_x, rot_y, rot_z, transform_points,
)


def test_elementary_rotations_are_rotations():
    for f in (rot_x, rot_y, rot_z):
        for a in np.linspace(-np.pi, np.pi, 7):
            assert is_rotation(f(a))


def test_rot_z_quarter_turn():
    np.testing.assert_allclose(rot_z(np.pi / 2) @ [1, 0, 0], [0, 1, 0], atol=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_pose_inverse_roundtrip(seed):
    rng = np.random.default_rng(seed)
    T = random_pose(rng)
    np.testing.assert_allclose(T @ pose_inverse(T), np.eye(4), atol=1e-12)


def test_batched_inverse():
    rng = np.random.default_rng(0)
    Ts = np.stack([random_pose(rng) for _ in range(5)])
    np.testing.assert_allclose(Ts @ pose_inverse(Ts), np.broadcast_to(np.eye(4), Ts.shape), atol=1e-12)


def test_random_rotations_valid():
    Rs = random_rotation(np.random.default_rng(1), size=100)
    assert all(is_rotation(R) for R in Rs)


def test_frame_from_z_keeps_axis():
    rng = np.random.default_rng(2)
    z = rng.standard_normal((50, 3))
    R = frame_from_z(z, rng.standard_normal((50, 3)))
    np.testing.assert_allclose(R[:, :, 2], z / np.linalg.norm(z, axis=1, keepdims=True), atol=1e-12)
    assert all(is_rotation(r) for r in R)


def test_transform_points_matches_homogeneous():
    T = make_pose(rot_x(0.3), [1, 2, 3])
    p = np.array([[0.5, -1.0, 2.0]])
    h = T @ np.append(p[0], 1.0)
    np.testing.assert_allclose(transform_points(T, p)[0], h[:3])
