"""Uniform voxel-grid index for radius, k-nearest and proximity queries.

Scene points are bucketed by ``floor(p / cell_size)``; buckets are stored as a
sorted key array plus CSR offsets so both the jitted kernels and the numpy path
can binary-search them. A query with radius ``r`` inspects the
``(2*ceil(r/cell)+1)**3`` surrounding cells, i.e. 27 when ``r <= cell_size``.

The ``brute_*`` functions are O(Q*M) reference implementations kept as oracles.
"""

import math

import numpy as np

from . import _accel
from ._accel import njit

_QUERY_BLOCK = 2048


# --------------------------------------------------------------------------
# jitted kernels (plain loops; also valid Python when numba is off)


@njit
def _ring_box(qc, ring, dims):
    lo = np.empty(3, np.int64)
    hi = np.empty(3, np.int64)
    for a in range(3):
        lo[a] = max(qc[a] - ring, 0)
        hi[a] = min(qc[a] + ring, dims[a] - 1)
    return lo, hi


@njit
def _find_cell(cell_keys, key):
    j = np.searchsorted(cell_keys, key)
    if j < cell_keys.shape[0] and cell_keys[j] == key:
        return j
    return -1


@njit
def _count_within_nb(spts, order, cell_keys, cell_start, lo, dims, cell, queries, self_idx, r2, ring, strict):
    nq = queries.shape[0]
    out = np.zeros(nq, np.int64)
    qc = np.empty(3, np.int64)
    for q in range(nq):
        x, y, z = queries[q, 0], queries[q, 1], queries[q, 2]
        qc[0] = np.int64(math.floor(x / cell)) - lo[0]
        qc[1] = np.int64(math.floor(y / cell)) - lo[1]
        qc[2] = np.int64(math.floor(z / cell)) - lo[2]
        blo, bhi = _ring_box(qc, ring, dims)
        cnt = 0
        for i in range(blo[0], bhi[0] + 1):
            for j in range(blo[1], bhi[1] + 1):
                for k in range(blo[2], bhi[2] + 1):
                    c = _find_cell(cell_keys, (i * dims[1] + j) * dims[2] + k)
                    if c < 0:
                        continue
                    for p in range(cell_start[c], cell_start[c + 1]):
                        if order[p] == self_idx[q]:
                            continue
                        dx = spts[p, 0] - x
                        dy = spts[p, 1] - y
                        dz = spts[p, 2] - z
                        d2 = dx * dx + dy * dy + dz * dz
                        if d2 < r2 or (not strict and d2 == r2):
                            cnt += 1
        out[q] = cnt
    return out


@njit
def _any_within_nb(spts, cell_keys, cell_start, lo, dims, cell, queries, r2, ring):
    qc = np.empty(3, np.int64)
    for q in range(queries.shape[0]):
        x, y, z = queries[q, 0], queries[q, 1], queries[q, 2]
        qc[0] = np.int64(math.floor(x / cell)) - lo[0]
        qc[1] = np.int64(math.floor(y / cell)) - lo[1]
        qc[2] = np.int64(math.floor(z / cell)) - lo[2]
        blo, bhi = _ring_box(qc, ring, dims)
        for i in range(blo[0], bhi[0] + 1):
            for j in range(blo[1], bhi[1] + 1):
                for k in range(blo[2], bhi[2] + 1):
                    c = _find_cell(cell_keys, (i * dims[1] + j) * dims[2] + k)
                    if c < 0:
                        continue
                    for p in range(cell_start[c], cell_start[c + 1]):
                        dx = spts[p, 0] - x
                        dy = spts[p, 1] - y
                        dz = spts[p, 2] - z
                        if dx * dx + dy * dy + dz * dz < r2:
                            return True
    return False


@njit
def _push_smallest(best, m, k, d2):
    """Insert d2 into the ascending buffer ``best`` holding ``m`` of at most k values."""
    if m == k:
        if d2 >= best[k - 1]:
            return m
        j = k - 1
    else:
        j = m
        m += 1
    while j > 0 and best[j - 1] > d2:
        best[j] = best[j - 1]
        j -= 1
    best[j] = d2
    return m


@njit
def _knn_mean_nb(spts, order, cell_keys, cell_start, lo, dims, cell, k):
    """Mean distance from every indexed point to its k nearest other points."""
    n = spts.shape[0]
    out = np.empty(n, np.float64)
    n_cells = cell_keys.shape[0]
    best = np.empty(k, np.float64)
    qc = np.empty(3, np.int64)
    for sq in range(n):
        x, y, z = spts[sq, 0], spts[sq, 1], spts[sq, 2]
        qc[0] = np.int64(math.floor(x / cell)) - lo[0]
        qc[1] = np.int64(math.floor(y / cell)) - lo[1]
        qc[2] = np.int64(math.floor(z / cell)) - lo[2]
        ring = 1
        while True:
            blo, bhi = _ring_box(qc, ring, dims)
            box_cells = (bhi[0] - blo[0] + 1) * (bhi[1] - blo[1] + 1) * (bhi[2] - blo[2] + 1)
            covers_all = (
                blo[0] == 0 and blo[1] == 0 and blo[2] == 0
                and bhi[0] == dims[0] - 1 and bhi[1] == dims[1] - 1 and bhi[2] == dims[2] - 1
            )
            m = 0
            if box_cells > n_cells or covers_all:
                for p in range(n):
                    if p == sq:
                        continue
                    dx = spts[p, 0] - x
                    dy = spts[p, 1] - y
                    dz = spts[p, 2] - z
                    m = _push_smallest(best, m, k, dx * dx + dy * dy + dz * dz)
                exhaustive = True
            else:
                for i in range(blo[0], bhi[0] + 1):
                    for j in range(blo[1], bhi[1] + 1):
                        for kk in range(blo[2], bhi[2] + 1):
                            c = _find_cell(cell_keys, (i * dims[1] + j) * dims[2] + kk)
                            if c < 0:
                                continue
                            for p in range(cell_start[c], cell_start[c + 1]):
                                if p == sq:
                                    continue
                                dx = spts[p, 0] - x
                                dy = spts[p, 1] - y
                                dz = spts[p, 2] - z
                                m = _push_smallest(best, m, k, dx * dx + dy * dy + dz * dz)
                exhaustive = False
            if m == k:
                bound = ring * cell
                if exhaustive or best[k - 1] <= bound * bound:
                    s = 0.0
                    for t in range(k):
                        s += math.sqrt(best[t])
                    out[order[sq]] = s / k
                    break
            elif exhaustive:
                out[order[sq]] = np.nan
                break
            ring += 1
    return out


# --------------------------------------------------------------------------
# numpy path


def _candidate_pairs(index, queries, ring):
    """All (query, sorted-point) pairs whose cells lie within ``ring`` cells.

    Returns (query_idx, sorted_point_pos, squared_distance)."""
    if index.n_cells == 0 or len(queries) == 0:
        empty = np.empty(0, np.int64)
        return empty, empty, np.empty(0)
    qc = np.floor(queries / index.cell_size).astype(np.int64) - index.lo
    dims = index.dims
    rng = np.arange(-ring, ring + 1)
    offsets = np.stack(np.meshgrid(rng, rng, rng, indexing="ij"), -1).reshape(-1, 3)
    qidx_parts, start_parts, count_parts = [], [], []
    for off in offsets:
        nc = qc + off
        ok = np.all((nc >= 0) & (nc < dims), axis=1)
        if not ok.any():
            continue
        qi = np.nonzero(ok)[0]
        keys = (nc[qi, 0] * dims[1] + nc[qi, 1]) * dims[2] + nc[qi, 2]
        pos = np.searchsorted(index.cell_keys, keys)
        pos_c = np.minimum(pos, index.n_cells - 1)
        hit = index.cell_keys[pos_c] == keys
        qidx_parts.append(qi[hit])
        start_parts.append(index.cell_start[pos_c[hit]])
        count_parts.append(index.cell_start[pos_c[hit] + 1] - index.cell_start[pos_c[hit]])
    if not qidx_parts:
        empty = np.empty(0, np.int64)
        return empty, empty, np.empty(0)
    qidx = np.concatenate(qidx_parts)
    start = np.concatenate(start_parts)
    count = np.concatenate(count_parts)
    total = int(count.sum())
    rep_q = np.repeat(qidx, count)
    first = np.cumsum(count) - count
    pos = np.arange(total) - np.repeat(first, count) + np.repeat(start, count)
    d = index.sorted_points[pos] - queries[rep_q]
    d2 = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]
    return rep_q, pos, d2


def _count_within_np(index, queries, self_idx, r2, ring, strict):
    out = np.zeros(len(queries), np.int64)
    for b in range(0, len(queries), _QUERY_BLOCK):
        qb = queries[b:b + _QUERY_BLOCK]
        qi, pos, d2 = _candidate_pairs(index, qb, ring)
        keep = d2 < r2 if strict else d2 <= r2
        keep &= index.order[pos] != self_idx[b:b + _QUERY_BLOCK][qi]
        out[b:b + len(qb)] = np.bincount(qi[keep], minlength=len(qb))
    return out


def _any_within_np(index, queries, r2, ring):
    for b in range(0, len(queries), _QUERY_BLOCK):
        _, _, d2 = _candidate_pairs(index, queries[b:b + _QUERY_BLOCK], ring)
        if np.any(d2 < r2):
            return True
    return False


def _knn_mean_np(index, k):
    n = index.n_points
    out = np.full(n, np.nan)
    pending = np.arange(n)  # sorted positions still unresolved
    ring = 1
    while len(pending):
        box_cells = np.prod(np.minimum(2 * ring + 1, index.dims))
        if box_cells > index.n_cells or np.all(2 * ring + 1 >= 2 * index.dims - 1):
            d2 = _brute_sqdist_rows(index.sorted_points, pending)
            d2[np.arange(len(pending)), pending] = np.inf
            kk = min(k, n - 1)
            if kk < k:
                break
            part = np.sort(np.partition(d2, kk - 1, axis=1)[:, :kk], axis=1)
            out[index.order[pending]] = np.sqrt(part).sum(axis=1) / k
            break
        still = []
        for b in range(0, len(pending), _QUERY_BLOCK):
            blk = pending[b:b + _QUERY_BLOCK]
            qi, pos, d2 = _candidate_pairs(index, index.sorted_points[blk], ring)
            not_self = pos != blk[qi]
            qi, d2 = qi[not_self], d2[not_self]
            o = np.lexsort((d2, qi))
            qi, d2 = qi[o], d2[o]
            group_start = np.searchsorted(qi, np.arange(len(blk)))
            rank = np.arange(len(qi)) - group_start[qi]
            sel = rank < k
            found = np.bincount(qi[sel], minlength=len(blk))
            sums = np.bincount(qi[sel], weights=np.sqrt(d2[sel]), minlength=len(blk))
            kth = np.full(len(blk), np.inf)
            last = rank == k - 1
            kth[qi[last]] = d2[last]
            bound = ring * index.cell_size
            ok = (found >= k) & (kth <= bound * bound)
            out[index.order[blk[ok]]] = sums[ok] / k
            still.append(blk[~ok])
        pending = np.concatenate(still) if still else pending[:0]
        ring += 1
    return out


def _brute_sqdist_rows(points, rows):
    q = points[rows]
    d2 = np.empty((len(rows), len(points)))
    for a in range(3):
        diff = q[:, a, None] - points[None, :, a]
        if a == 0:
            d2[:] = diff * diff
        else:
            d2 += diff * diff
    return d2


# --------------------------------------------------------------------------


class VoxelIndex:
    """Immutable voxel bucketing of a scene cloud."""

    def __init__(self, points, cell_size):
        if not cell_size > 0:
            raise ValueError("cell_size must be positive")
        pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
        self.cell_size = float(cell_size)
        self.n_points = len(pts)
        if self.n_points == 0:
            self.lo = np.zeros(3, np.int64)
            self.dims = np.ones(3, np.int64)
            self.order = np.empty(0, np.int64)
            self.sorted_points = pts
            self.cell_keys = np.empty(0, np.int64)
            self.cell_start = np.zeros(1, np.int64)
        else:
            c = np.floor(pts / self.cell_size).astype(np.int64)
            self.lo = c.min(axis=0)
            self.dims = c.max(axis=0) - self.lo + 1
            c -= self.lo
            keys = (c[:, 0] * self.dims[1] + c[:, 1]) * self.dims[2] + c[:, 2]
            self.order = np.argsort(keys, kind="stable")
            self.sorted_points = np.ascontiguousarray(pts[self.order])
            sk = keys[self.order]
            self.cell_keys, first = np.unique(sk, return_index=True)
            self.cell_start = np.append(first, len(sk)).astype(np.int64)
        self.n_cells = len(self.cell_keys)
        for arr in (self.order, self.sorted_points, self.cell_keys, self.cell_start):
            arr.setflags(write=False)

    def _ring(self, radius):
        return max(1, int(math.ceil(radius / self.cell_size)))

    def neighbor_cells(self, point, radius):
        """Keys of the occupied cells a radius query at ``point`` would inspect."""
        ring = self._ring(radius)
        qc = np.floor(np.asarray(point, float) / self.cell_size).astype(np.int64) - self.lo
        out = []
        for off in np.ndindex(2 * ring + 1, 2 * ring + 1, 2 * ring + 1):
            nc = qc + np.array(off) - ring
            if np.any(nc < 0) or np.any(nc >= self.dims):
                continue
            key = (nc[0] * self.dims[1] + nc[1]) * self.dims[2] + nc[2]
            if self.n_cells and _find_cell(self.cell_keys, key) >= 0:
                out.append(int(key))
        return out

    def query_radius(self, point, radius, strict=False):
        """Sorted original indices of points within ``radius`` of ``point``."""
        q = np.asarray(point, dtype=np.float64).reshape(1, 3)
        _, pos, d2 = _candidate_pairs(self, q, self._ring(radius))
        r2 = radius * radius
        keep = d2 < r2 if strict else d2 <= r2
        return np.sort(self.order[pos[keep]])

    def count_within(self, queries, radius, self_index=None, strict=False, backend=None):
        """Per-query neighbor counts. ``self_index[q]`` (original index, or -1)
        is skipped so a scene point does not count itself."""
        queries = np.ascontiguousarray(np.asarray(queries, dtype=np.float64).reshape(-1, 3))
        if self_index is None:
            self_index = np.full(len(queries), -1, np.int64)
        self_index = np.asarray(self_index, dtype=np.int64)
        if self.n_points == 0:
            return np.zeros(len(queries), np.int64)
        ring = self._ring(radius)
        r2 = float(radius) * float(radius)
        if _accel.resolve(backend):
            return _count_within_nb(
                self.sorted_points, self.order, self.cell_keys, self.cell_start, self.lo,
                self.dims, self.cell_size, queries, self_index, r2, ring, strict,
            )
        return _count_within_np(self, queries, self_index, r2, ring, strict)

    def any_within(self, queries, radius, backend=None):
        """True iff some query lies strictly closer than ``radius`` to some point."""
        queries = np.ascontiguousarray(np.asarray(queries, dtype=np.float64).reshape(-1, 3))
        if self.n_points == 0 or len(queries) == 0:
            return False
        ring = self._ring(radius)
        r2 = float(radius) * float(radius)
        if _accel.resolve(backend):
            return bool(_any_within_nb(
                self.sorted_points, self.cell_keys, self.cell_start, self.lo,
                self.dims, self.cell_size, queries, r2, ring,
            ))
        return _any_within_np(self, queries, r2, ring)

    def knn_mean_distance(self, k, backend=None):
        """Mean distance of every indexed point to its ``k`` nearest other points."""
        if k < 1 or k >= self.n_points:
            raise ValueError(f"need 1 <= k < n_points (k={k}, n={self.n_points})")
        if _accel.resolve(backend):
            return _knn_mean_nb(
                self.sorted_points, self.order, self.cell_keys, self.cell_start,
                self.lo, self.dims, self.cell_size, int(k),
            )
        return _knn_mean_np(self, int(k))


def knn_cell_size(points, k):
    """Cell edge for k-nearest queries: large enough that the first 27-cell
    ring usually already bounds the k-th neighbor.

    Takes the larger of a surface-density and a volume-density estimate, so
    both shell-like object clouds and filled blobs get a sensible grid. Only
    speed depends on this; query results are exact for any cell size.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        return 1.0
    span = np.percentile(pts, 95, axis=0) - np.percentile(pts, 5, axis=0)
    length = float(span.max())
    if not length > 0:
        length = float(np.ptp(pts, axis=0).max())
    if not length > 0:
        return 1.0
    surface = length * math.sqrt(k / (math.pi * n))
    volume = (k * float(np.prod(span)) / (27.0 * n)) ** (1.0 / 3.0)
    return 1.5 * max(surface, volume)


# --------------------------------------------------------------------------
# brute-force oracles


def brute_sqdist(a, b):
    a = np.asarray(a, float).reshape(-1, 3)
    b = np.asarray(b, float).reshape(-1, 3)
    dx = a[:, None, 0] - b[None, :, 0]
    dy = a[:, None, 1] - b[None, :, 1]
    dz = a[:, None, 2] - b[None, :, 2]
    return dx * dx + dy * dy + dz * dz


def brute_radius_query(points, point, radius, strict=False):
    d2 = brute_sqdist(point, points)[0]
    r2 = radius * radius
    return np.nonzero(d2 < r2 if strict else d2 <= r2)[0]


def brute_count_within(points, radius, exclude_self=True):
    d2 = brute_sqdist(points, points)
    if exclude_self:
        np.fill_diagonal(d2, np.inf)
    return (d2 <= radius * radius).sum(axis=1)


def brute_knn_mean_distance(points, k):
    d2 = brute_sqdist(points, points)
    np.fill_diagonal(d2, np.inf)
    return np.sqrt(np.sort(d2, axis=1)[:, :k]).sum(axis=1) / k


def brute_any_within(queries, points, radius):
    if len(points) == 0 or len(queries) == 0:
        return False
    return bool(np.any(brute_sqdist(queries, points) < radius * radius))
