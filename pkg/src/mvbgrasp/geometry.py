"""SE(3) helpers. Poses are plain 4x4 float64 homogeneous matrices."""

import numpy as np


def make_pose(rotation=None, translation=None):
    T = np.eye(4)
    if rotation is not None:
        T[:3, :3] = rotation
    if translation is not None:
        T[:3, 3] = translation
    return T


def pose_inverse(T):
    R = T[..., :3, :3]
    t = T[..., :3, 3]
    out = np.zeros_like(T)
    Rt = np.swapaxes(R, -1, -2)
    out[..., :3, :3] = Rt
    out[..., :3, 3] = -np.einsum("...ij,...j->...i", Rt, t)
    out[..., 3, 3] = 1.0
    return out


def rot_x(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def quat_to_matrix(q):
    """Unit quaternions (..., 4) in (w, x, y, z) order to rotation matrices."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = np.moveaxis(q, -1, 0)
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = 1 - 2 * (y * y + z * z)
    R[..., 0, 1] = 2 * (x * y - z * w)
    R[..., 0, 2] = 2 * (x * z + y * w)
    R[..., 1, 0] = 2 * (x * y + z * w)
    R[..., 1, 1] = 1 - 2 * (x * x + z * z)
    R[..., 1, 2] = 2 * (y * z - x * w)
    R[..., 2, 0] = 2 * (x * z - y * w)
    R[..., 2, 1] = 2 * (y * z + x * w)
    R[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return R


def random_rotation(rng, size=None):
    """Uniformly distributed rotations (Haar measure) from normalised Gaussian quaternions."""
    shape = (4,) if size is None else (size, 4)
    return quat_to_matrix(rng.standard_normal(shape))


def random_pose(rng, translation_scale=1.0):
    return make_pose(random_rotation(rng), rng.uniform(-translation_scale, translation_scale, 3))


def transform_points(T, points):
    points = np.asarray(points, dtype=float)
    return points @ T[:3, :3].T + T[:3, 3]


def frame_from_z(z, y_hint):
    """Right-handed rotation whose third column is ``z`` and second is ``y_hint``
    orthogonalised against it. Works row-wise on (N, 3) inputs."""
    z = np.asarray(z, dtype=float)
    z = z / np.linalg.norm(z, axis=-1, keepdims=True)
    y = y_hint - np.sum(y_hint * z, axis=-1, keepdims=True) * z
    y = y / np.linalg.norm(y, axis=-1, keepdims=True)
    x = np.cross(y, z)
    return np.stack([x, y, z], axis=-1)


def is_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    return bool(
        np.allclose(R.T @ R, np.eye(3), atol=tol, rtol=0.0)
        and abs(np.linalg.det(R) - 1.0) <= tol
    )
