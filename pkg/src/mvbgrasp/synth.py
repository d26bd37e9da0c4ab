"""Deterministic stand-ins for the learned generator and the physics rollout.

Objects are analytic solids resting on the table plane z=0 of the robot base
frame (robot at the origin, facing +x, z up). Cylinders and bottles are solids
of revolution described by an (r, z) profile; the asymmetric box is handled
separately. All randomness flows through ``numpy.random.Generator(PCG64)``.
"""

import hashlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import frame_from_z, make_pose, rot_y
from .pointcloud import PointCloud
from .scoring import GraspBatch

OBJECT_KINDS = ("cylinder", "box_asym", "bottle")
DISTANCE_BINS = ("Near", "Mid", "Far")
LATERAL_BINS = ("Left", "Center", "Right")
PITCHES_DEG = (-45, 0, 45)


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ObjectDims:
    cylinder_radius: float = 0.03
    cylinder_height: float = 0.12
    box_extents: tuple = (0.04, 0.06, 0.10)
    bottle_radius: float = 0.032
    bottle_body_height: float = 0.16
    bottle_neck_radius: float = 0.012
    bottle_neck_height: float = 0.04


@dataclass(frozen=True, eq=False)
class ObjectSpec:
    """An object kind, its sizes, and its pose (local -> base)."""

    kind: str
    dims: ObjectDims = ObjectDims()
    pose: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        if self.kind not in OBJECT_KINDS:
            raise ValueError(f"unknown object kind {self.kind!r}")

    @property
    def profile(self):
        """(r, z) profile polyline of a solid of revolution, axis endpoints included."""
        d = self.dims
        if self.kind == "cylinder":
            R, H = d.cylinder_radius, d.cylinder_height
            return np.array([(0.0, 0.0), (R, 0.0), (R, H), (0.0, H)])
        if self.kind == "bottle":
            R, Hb = d.bottle_radius, d.bottle_body_height
            rn, top = d.bottle_neck_radius, d.bottle_body_height + d.bottle_neck_height
            return np.array([(0.0, 0.0), (R, 0.0), (R, Hb), (rn, top), (0.0, top)])
        return None

    @property
    def box_half(self):
        return np.asarray(self.dims.box_extents, dtype=float) / 2.0

    @property
    def local_center(self):
        if self.kind == "box_asym":
            return np.array([0.0, 0.0, self.dims.box_extents[2] / 2.0])
        return np.array([0.0, 0.0, self.profile[:, 1].max() / 2.0])

    def to_local(self, pts):
        return (np.asarray(pts, float) - self.pose[:3, 3]) @ self.pose[:3, :3]

    def to_world(self, pts):
        return np.asarray(pts, float) @ self.pose[:3, :3].T + self.pose[:3, 3]

    def rim_points(self):
        """Points whose convex hull bounds the solid (for table placement)."""
        if self.kind == "box_asym":
            h = self.box_half
            return np.array([(sx * h[0], sy * h[1], h[2] + sz * h[2])
                             for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        phi = np.linspace(0, 2 * np.pi, 721)
        rims = [np.column_stack([r * np.cos(phi), r * np.sin(phi), np.full_like(phi, z)])
                for r, z in self.profile]
        return np.vstack(rims)


def place_object(kind, x, y, pitch_deg, dims=ObjectDims()):
    """Object tilted by ``pitch_deg`` about the base y axis, lowest point on z=0."""
    R = rot_y(math.radians(pitch_deg))
    spec = ObjectSpec(kind, dims, make_pose(R, (x, y, 0.0)))
    lift = -spec.to_world(spec.rim_points())[:, 2].min()
    return ObjectSpec(kind, dims, make_pose(R, (x, y, lift)))


# --------------------------------------------------------------------------
# surface sampling


def _sample_revolution(profile, n_orbits, rng):
    r0, z0 = profile[:-1, 0], profile[:-1, 1]
    r1, z1 = profile[1:, 0], profile[1:, 1]
    length = np.hypot(r1 - r0, z1 - z0)
    area = np.pi * (r0 + r1) * length
    seg = rng.choice(len(area), size=n_orbits, p=area / area.sum())
    u = rng.random(n_orbits)
    phi = rng.random(n_orbits) * (np.pi / 2)
    a, b = r0[seg], r1[seg]
    # density along a segment is proportional to its radius
    with np.errstate(invalid="ignore", divide="ignore"):
        t_cone = (-a + np.sqrt(a * a + u * (b * b - a * a))) / (b - a)
    t = np.where(np.abs(b - a) < 1e-15, u, t_cone)
    rho = a + (b - a) * t
    z = z0[seg] + (z1[seg] - z0[seg]) * t
    dr, dz = (r1 - r0)[seg] / length[seg], (z1 - z0)[seg] / length[seg]
    nr, nz = dz, -dr
    pts, nrm = [], []
    for sx, sy in ((1, 1), (-1, 1), (1, -1), (-1, -1)):
        c, s = sx * np.cos(phi), sy * np.sin(phi)
        pts.append(np.column_stack([rho * c, rho * s, z]))
        nrm.append(np.column_stack([nr * c, nr * s, nz]))
    return _interleave(pts), _interleave(nrm)


def _sample_box(half, n_orbits, rng):
    area = np.array([half[1] * half[2], half[0] * half[2], half[0] * half[1]])
    axis = rng.choice(3, size=n_orbits, p=area / area.sum())
    uv = rng.random((n_orbits, 3)) * 2 - 1
    pts, nrm = [], []
    for signs in itertools.product((1, -1), repeat=3):
        p = uv * half * np.array(signs)
        n = np.zeros((n_orbits, 3))
        for i in range(3):
            on = axis == i
            p[on, i] = signs[i] * half[i]
            n[on, i] = signs[i]
        p[:, 2] += half[2]
        pts.append(p)
        nrm.append(n)
    return _interleave(pts), _interleave(nrm)


def _interleave(blocks):
    """Stack mirror images so each orbit is contiguous."""
    return np.stack(blocks, axis=1).reshape(-1, 3)


def _sample_surface(spec, n_pts, rng):
    if spec.kind == "box_asym":
        orbit = 8
        pts, nrm = _sample_box(spec.box_half, -(-n_pts // orbit), rng)
    else:
        orbit = 4
        pts, nrm = _sample_revolution(spec.profile, -(-n_pts // orbit), rng)
    R = spec.pose[:3, :3]
    return spec.to_world(pts), nrm @ R.T


def make_object_cloud(spec, points_per_object=2000, noise_sigma=0.0, rng_seed=0,
                      view_point=None, backside_keep=0.3):
    """Surface samples of the posed object in the base frame.

    Samples come in mirror-symmetric orbits about the object's own axes, so for
    counts divisible by 8 (box) or 4 (revolution) the cloud's principal axes
    coincide with the object's. With ``view_point`` set, points whose normal
    faces away from it survive only with probability ``backside_keep``.
    """
    n = int(points_per_object)
    if n <= 0:
        raise ValueError("points_per_object must be positive")
    rng = make_rng(rng_seed)
    if view_point is None:
        pts, _ = _sample_surface(spec, n, rng)
        pts = pts[:n]
    else:
        view_point = np.asarray(view_point, dtype=float)
        chunks, have = [], 0
        while have < n:
            p, nv = _sample_surface(spec, 2 * n, rng)
            facing = np.einsum("ij,ij->i", nv, view_point - p) > 0
            keep = facing | (rng.random(len(p)) < backside_keep)
            chunks.append(p[keep])
            have += int(keep.sum())
        pts = np.vstack(chunks)[:n]
    if noise_sigma > 0:
        pts = pts + rng.normal(0.0, noise_sigma, pts.shape)
    return PointCloud(pts)


def make_table_patch(center_xy, half_size=0.12, spacing=0.01):
    g = np.arange(-half_size, half_size + 1e-12, spacing)
    xx, yy = np.meshgrid(g + center_xy[0], g + center_xy[1], indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)])


# --------------------------------------------------------------------------
# analytic geometry


def _closest_on_segments(q2, profile):
    """Closest point on the profile polyline for (M, 2) (rho, z) queries.
    Returns (closest (M, 2), outward segment normal (M, 2), distance (M,))."""
    a, b = profile[:-1], profile[1:]
    ab = b - a
    L2 = (ab * ab).sum(axis=1)
    t = np.clip(((q2[:, None, :] - a[None]) * ab[None]).sum(-1) / L2[None], 0.0, 1.0)
    c = a[None] + t[..., None] * ab[None]
    d = np.linalg.norm(q2[:, None, :] - c, axis=-1)
    j = np.argmin(d, axis=1)
    rows = np.arange(len(q2))
    L = np.sqrt(L2)
    normals = np.column_stack([ab[:, 1] / L, -ab[:, 0] / L])
    return c[rows, j], normals[j], d[rows, j]


def surface_distance(spec, points):
    """Unsigned distance from base-frame points to the object surface."""
    q = spec.to_local(np.asarray(points, float).reshape(-1, 3))
    if spec.kind == "box_asym":
        h = spec.box_half
        p = q - np.array([0.0, 0.0, h[2]])
        outside = np.maximum(np.abs(p) - h, 0.0)
        d_out = np.linalg.norm(outside, axis=1)
        d_in = np.min(h - np.abs(p), axis=1)
        return np.where(d_out > 0, d_out, d_in)
    q2 = np.column_stack([np.hypot(q[:, 0], q[:, 1]), q[:, 2]])
    return _closest_on_segments(q2, spec.profile)[2]


def closest_surface(spec, point):
    """(closest surface point, outward unit normal there), both in the base frame."""
    q = spec.to_local(np.asarray(point, float).reshape(1, 3))[0]
    if spec.kind == "box_asym":
        h = spec.box_half
        off = np.array([0.0, 0.0, h[2]])
        p = q - off
        excess = np.abs(p) - h
        if np.any(excess > 0):
            c = np.clip(p, -h, h)
            i = int(np.argmax(excess))
        else:
            i = int(np.argmin(h - np.abs(p)))
            c = p.copy()
        sign = 1.0 if p[i] >= 0 else -1.0
        c[i] = sign * h[i]
        n = np.zeros(3)
        n[i] = sign
        c_local = c + off
    else:
        rho = math.hypot(q[0], q[1])
        phi = math.atan2(q[1], q[0])
        c2, n2, _ = _closest_on_segments(np.array([[rho, q[2]]]), spec.profile)
        c_local = np.array([c2[0, 0] * math.cos(phi), c2[0, 0] * math.sin(phi), c2[0, 1]])
        n = np.array([n2[0, 0] * math.cos(phi), n2[0, 0] * math.sin(phi), n2[0, 1]])
    R = spec.pose[:3, :3]
    return spec.to_world(c_local[None])[0], R @ n


def inside(spec, points):
    q = spec.to_local(np.asarray(points, float).reshape(-1, 3))
    if spec.kind == "box_asym":
        h = spec.box_half
        return np.all(np.abs(q - np.array([0.0, 0.0, h[2]])) <= h, axis=1)
    prof = spec.profile
    side = prof[1:-1]
    r_at = np.interp(q[:, 2], side[:, 1], side[:, 0])
    return (q[:, 2] >= 0) & (q[:, 2] <= prof[:, 1].max()) & (np.hypot(q[:, 0], q[:, 1]) <= r_at)


def chord_length(spec, origin, direction, half_span=0.3, step=5e-4):
    """Length of the line ``origin + s * direction`` inside the (convex) solid."""
    direction = np.asarray(direction, float)
    s = np.arange(-half_span, half_span + step / 2, step)
    hit = inside(spec, origin + s[:, None] * direction)
    if not hit.any():
        return 0.0
    idx = np.nonzero(hit)[0]

    def edge(s_out, s_in):
        for _ in range(40):
            mid = 0.5 * (s_out + s_in)
            if inside(spec, (origin + mid * direction)[None])[0]:
                s_in = mid
            else:
                s_out = mid
        return s_in

    lo = edge(s[idx[0]] - step, s[idx[0]]) if idx[0] > 0 else s[0]
    hi = edge(s[idx[-1]] + step, s[idx[-1]]) if idx[-1] < len(s) - 1 else s[-1]
    return float(hi - lo)


# --------------------------------------------------------------------------
# candidate sampler


def sample_candidates(cloud, n=800, rng_seed=0, inward_weight=0.5, inward_spread=0.35,
                      max_depth=0.01, score_noise=0.15):
    """Seeded 6-DoF candidates around a cloud, with synthetic confidence scores.

    Each grasp anchors at a random cloud point. With probability
    ``inward_weight`` its approach axis points from that point toward the cloud
    centroid (perturbed by ``inward_spread``); otherwise it is uniform on the
    sphere. Raw scores decay with distance from the centroid plus Gaussian
    noise, clipped to [0, 1]; they carry no information about approach direction.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, float)
    if len(pts) == 0:
        raise ValueError("cannot sample grasps on an empty cloud")
    rng = make_rng(rng_seed)
    centroid = pts.mean(axis=0)
    scale = max(float(np.sqrt(((pts - centroid) ** 2).sum(axis=1).mean())), 1e-6)

    anchor = pts[rng.integers(0, len(pts), n)]
    uniform = rng.standard_normal((n, 3))
    inward = centroid - anchor
    inward /= np.maximum(np.linalg.norm(inward, axis=1, keepdims=True), 1e-12)
    inward += inward_spread * rng.standard_normal((n, 3))
    use_inward = rng.random(n) < inward_weight
    z = np.where(use_inward[:, None], inward, uniform)
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    y_hint = rng.standard_normal((n, 3))
    R = frame_from_z(z, y_hint)
    t = anchor + rng.random((n, 1)) * max_depth * z

    poses = np.zeros((n, 4, 4))
    poses[:, :3, :3] = R
    poses[:, :3, 3] = t
    poses[:, 3, 3] = 1.0
    d = np.linalg.norm(t - centroid, axis=1) / scale
    raw = np.clip(np.exp(-0.5 * d * d) + score_noise * rng.standard_normal(n), 0.0, 1.0)
    return GraspBatch(poses, raw)


# --------------------------------------------------------------------------
# feasibility oracle


@dataclass(frozen=True)
class FeasibilitySpec:
    frontal_cone_half_angle: float = 60.0
    table_clearance: float = 0.02
    max_reach: float = 0.70
    grasp_width_max: float = 0.085

    def __post_init__(self):
        if not 0 < self.frontal_cone_half_angle < 90:
            raise ValueError("cone half-angle must lie in (0, 90) degrees")
        for name in ("table_clearance", "max_reach", "grasp_width_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


PREDICATES = ("cone", "clearance", "reach", "width", "approach")


def feasibility_checks(pose, obj, spec=FeasibilitySpec()):
    """Per-predicate verdicts for a base-frame grasp pose.

    cone: approach within the half-angle of the horizontal direction pointing
    from the robot toward the grasp; clearance: grasp point above the table
    margin; reach: grasp point within reach of the base origin; width: the
    object chord along the finger axis is non-empty and fits the gripper;
    approach: the axis points into the surface at the nearest surface point.
    """
    pose = np.asarray(pose, float)
    z, y, t = pose[:3, 2], pose[:3, 1], pose[:3, 3]
    horiz = np.array([t[0], t[1], 0.0])
    hn = np.linalg.norm(horiz)
    cos_lim = math.cos(math.radians(spec.frontal_cone_half_angle))
    cone = bool(hn > 1e-9 and float(z @ horiz) / hn >= cos_lim)
    width = chord_length(obj, t, y)
    _, normal = closest_surface(obj, t)
    return {
        "cone": cone,
        "clearance": bool(t[2] > spec.table_clearance),
        "reach": bool(np.linalg.norm(t) <= spec.max_reach),
        "width": bool(0.0 < width <= spec.grasp_width_max),
        "approach": bool(float(z @ normal) < 0.0),
    }


def feasibility_oracle(pose, obj, spec=FeasibilitySpec()):
    """(success, failed predicate names in canonical order)."""
    checks = feasibility_checks(pose, obj, spec)
    failures = [name for name in PREDICATES if not checks[name]]
    return not failures, failures


# --------------------------------------------------------------------------
# scenario grid


@dataclass(frozen=True)
class Scenario:
    object_kind: str
    distance_bin: str
    lateral_bin: str
    pitch_deg: int
    seed: int
    occlusion: str = "none"

    @property
    def key(self):
        return (OBJECT_KINDS.index(self.object_kind), DISTANCE_BINS.index(self.distance_bin),
                LATERAL_BINS.index(self.lateral_bin), PITCHES_DEG.index(self.pitch_deg))

    @property
    def name(self):
        p = f"{'m' if self.pitch_deg < 0 else 'p'}{abs(self.pitch_deg)}"
        return f"{self.object_kind}_{self.distance_bin}_{self.lateral_bin}_{p}"


def cell_seed(master_seed, kind, dist, lat, pitch):
    h = hashlib.blake2b(f"{master_seed}|{kind}|{dist}|{lat}|{pitch}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") & (2**63 - 1)


def scenario_grid(master_seed=0, objects=OBJECT_KINDS):
    """Object-major product objects x distance x lateral x pitch (81 cells by default)."""
    return [
        Scenario(o, d, l, p, cell_seed(master_seed, o, d, l, p))
        for o in objects
        for d in DISTANCE_BINS
        for l in LATERAL_BINS
        for p in PITCHES_DEG
    ]
