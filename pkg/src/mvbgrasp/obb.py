"""PCA-oriented bounding boxes and their face descriptors."""

from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .errors import TooFewPointsError
from .pointcloud import PointCloud

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 50
DEGENERATE_GAP = 1e-9


def _jacobi_sym3(a, tol, max_sweeps):
    """Cyclic Jacobi on a symmetric 3x3 matrix.

    Returns (eigenvalues, eigenvector columns, sweeps used). Stops once every
    off-diagonal magnitude is <= tol * trace(|diag|) of the input.
    """
    A = a.copy()
    V = np.eye(3)
    scale = abs(A[0, 0]) + abs(A[1, 1]) + abs(A[2, 2])
    thresh = tol * scale
    sweeps = 0
    for sweep in range(max_sweeps):
        off = max(abs(A[0, 1]), abs(A[0, 2]), abs(A[1, 2]))
        if off <= thresh:
            break
        sweeps = sweep + 1
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = A[p, q]
            if apq == 0.0:
                continue
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            if abs(theta) > 1e150:
                t = 0.5 / theta
            else:
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            for k in range(3):
                akp = A[k, p]
                akq = A[k, q]
                A[k, p] = c * akp - s * akq
                A[k, q] = s * akp + c * akq
            for k in range(3):
                apk = A[p, k]
                aqk = A[q, k]
                A[p, k] = c * apk - s * aqk
                A[q, k] = s * apk + c * aqk
            for k in range(3):
                vkp = V[k, p]
                vkq = V[k, q]
                V[k, p] = c * vkp - s * vkq
                V[k, q] = s * vkp + c * vkq
    w = np.empty(3)
    for i in range(3):
        w[i] = A[i, i]
    return w, V, sweeps


_jacobi_sym3_nb = njit(_jacobi_sym3)


def jacobi_eigh(a, backend=None, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    a = np.ascontiguousarray(a, dtype=np.float64)
    fn = _jacobi_sym3_nb if _accel.resolve(backend) else _jacobi_sym3
    return fn(a, tol, max_sweeps)


def canonical_axes(eigvals, eigvecs):
    """Order and sign-fix eigenvectors into a right-handed rotation.

    Each vector's largest-magnitude component is made positive (first index on
    ties). Axes sort by decreasing eigenvalue; eigenvalues within a relative
    gap of 1e-9 are ordered by descending lexicographic vector order. The third
    axis is then replaced by v1 x v2.
    """
    vecs = np.array(eigvecs, dtype=float, copy=True)
    for i in range(3):
        j = int(np.argmax(np.abs(vecs[:, i])))
        if vecs[j, i] < 0:
            vecs[:, i] = -vecs[:, i]
    order = sorted(range(3), key=lambda i: -eigvals[i])
    scale = max(abs(eigvals[i]) for i in range(3))
    groups = [[order[0]]]
    for i in order[1:]:
        if eigvals[groups[-1][-1]] - eigvals[i] <= DEGENERATE_GAP * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    final = []
    for g in groups:
        final.extend(sorted(g, key=lambda i: tuple(vecs[:, i]), reverse=True))
    R = vecs[:, final]
    R[:, 2] = np.cross(R[:, 0], R[:, 1])
    return np.asarray(eigvals)[final], R


@dataclass(frozen=True, eq=False)
class Face:
    normal: np.ndarray
    center: np.ndarray
    axis: int
    sign: int

    def to_json(self):
        return {
            "axis": self.axis,
            "sign": self.sign,
            "normal": self.normal.tolist(),
            "center": self.center.tolist(),
        }


@dataclass(frozen=True, eq=False)
class Obb:
    """Box with principal-axis columns ``rotation``, ``center`` and full side
    lengths ``extents`` (e1 along the largest-variance axis)."""

    rotation: np.ndarray
    center: np.ndarray
    extents: np.ndarray
    eigenvalues: np.ndarray = None

    @property
    def transform(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.center
        return T

    def to_local(self, points):
        return (np.asarray(points, float) - self.center) @ self.rotation

    def faces(self):
        return extract_faces(self)

    def transformed(self, T):
        return Obb(T[:3, :3] @ self.rotation, T[:3, :3] @ self.center + T[:3, 3],
                   self.extents, self.eigenvalues)

    def to_json(self):
        return {
            "rotation": self.rotation.reshape(9).tolist(),
            "center": self.center.tolist(),
            "extents": self.extents.tolist(),
            "faces": [f.to_json() for f in self.faces()],
        }


def sample_covariance(points):
    pts = np.asarray(points, dtype=float)
    mu = pts.mean(axis=0)
    X = pts - mu
    return mu, X, (X.T @ X) / (len(pts) - 1)


def fit_obb(cloud, backend=None):
    """PCA box: axes from the sample covariance, center and extents from the
    per-axis projection extrema so the box touches the cloud on all six sides."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, float).reshape(-1, 3)
    if len(pts) < 3:
        raise TooFewPointsError(f"OBB fit needs at least 3 points, got {len(pts)}")
    mu, X, cov = sample_covariance(pts)
    w, V, _ = jacobi_eigh(cov, backend=backend)
    w, R = canonical_axes(w, V)
    proj = X @ R
    mn = proj.min(axis=0)
    mx = proj.max(axis=0)
    center = mu + R @ ((mn + mx) / 2.0)
    return Obb(R, center, mx - mn, w)


def extract_faces(obb):
    """Six faces ordered (axis 0, -), (axis 0, +), (axis 1, -), ..."""
    faces = []
    for i in range(3):
        for sign in (-1, 1):
            n = sign * obb.rotation[:, i]
            faces.append(Face(n, obb.center + (obb.extents[i] / 2.0) * n, i, sign))
    return faces


def select_faces(faces, k=2, origin=(0.0, 0.0, 0.0)):
    """The k faces whose centers are closest to ``origin``, nearest first.
    Exact distance ties go to the lower axis index, then sign -1 before +1."""
    if not 1 <= k <= len(faces):
        raise ValueError(f"k must lie in [1, {len(faces)}], got {k}")
    origin = np.asarray(origin, dtype=float)
    keyed = sorted(faces, key=lambda f: (float(np.linalg.norm(f.center - origin)), f.axis, f.sign))
    return keyed[:k]


def face_normals(faces):
    return np.array([f.normal for f in faces], dtype=float).reshape(-1, 3)
