import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import BACKENDS
from mvbgrasp.neighbors import (
    VoxelIndex, brute_any_within, brute_count_within, brute_knn_mean_distance,
    brute_radius_query, knn_cell_size,
)


def test_single_point_found_at_half_cell():
    idx = VoxelIndex([[0.3, 0.3, 0.3]], 0.1)
    assert list(idx.query_radius([0.35, 0.3, 0.3], 0.1)) == [0]


def test_point_two_cells_away_not_found():
    idx = VoxelIndex([[0.3, 0.3, 0.3]], 0.1)
    assert len(idx.query_radius([0.5, 0.3, 0.3], 0.1)) == 0


def test_radius_query_matches_brute_force():
    rng = np.random.default_rng(7)
    pts = rng.random((1000, 3))
    cell = 0.08
    idx = VoxelIndex(pts, cell)
    for q in rng.random((100, 3)):
        np.testing.assert_array_equal(idx.query_radius(q, cell), brute_radius_query(pts, q, cell))


@given(st.floats(0.01, 0.2), st.integers(0, 10_000))
def test_small_radius_inspects_at_most_27_cells(cell, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((300, 3))
    idx = VoxelIndex(pts, cell)
    q = rng.random(3)
    assert len(idx.neighbor_cells(q, cell)) <= 27
    assert len(idx.neighbor_cells(q, 0.5 * cell)) <= 27


def test_empty_index():
    idx = VoxelIndex(np.empty((0, 3)), 0.1)
    assert not idx.any_within([[0, 0, 0]], 1.0)
    assert idx.count_within([[0, 0, 0]], 1.0).tolist() == [0]
    assert len(idx.query_radius([0, 0, 0], 1.0)) == 0


def test_bad_cell_size():
    with pytest.raises(ValueError):
        VoxelIndex([[0, 0, 0]], 0.0)


@pytest.mark.parametrize("cell", [0.02, 0.07, 0.3])
def test_count_within_matches_brute(backend, cell):
    rng = np.random.default_rng(3)
    pts = np.vstack([rng.random((600, 3)), rng.random((20, 3)) * 0.01])
    r = 0.06
    idx = VoxelIndex(pts, cell)
    got = idx.count_within(pts, r, self_index=np.arange(len(pts)), backend=backend)
    np.testing.assert_array_equal(got, brute_count_within(pts, r))


@pytest.mark.parametrize("k", [1, 5, 20])
def test_knn_mean_matches_brute(backend, k):
    rng = np.random.default_rng(k)
    pts = np.vstack([rng.random((700, 3)), [[50.0, 50.0, 50.0]], [[0.5, 0.5, 0.5]] * 3])
    idx = VoxelIndex(pts, knn_cell_size(pts, k))
    np.testing.assert_allclose(idx.knn_mean_distance(k, backend=backend),
                               brute_knn_mean_distance(pts, k), rtol=1e-12, atol=1e-15)


def test_knn_tiny_cells_forces_ring_growth(backend):
    rng = np.random.default_rng(9)
    pts = rng.random((200, 3))
    idx = VoxelIndex(pts, 0.005)
    np.testing.assert_allclose(idx.knn_mean_distance(4, backend=backend),
                               brute_knn_mean_distance(pts, 4), rtol=1e-12)


def test_knn_rejects_bad_k():
    idx = VoxelIndex(np.zeros((5, 3)), 1.0)
    with pytest.raises(ValueError):
        idx.knn_mean_distance(5)


def test_any_within_is_strict(backend):
    idx = VoxelIndex([[0.0, 0.0, 0.0]], 0.25)
    assert not idx.any_within([[0.25, 0.0, 0.0]], 0.25, backend=backend)
    assert idx.any_within([[0.2499, 0.0, 0.0]], 0.25, backend=backend)


@given(st.integers(0, 2**31))
def test_any_within_matches_brute(seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((200, 3))
    q = rng.random((30, 3))
    r = rng.uniform(0.005, 0.1)
    idx = VoxelIndex(pts, r)
    expected = brute_any_within(q, pts, r)
    for backend in BACKENDS:
        assert idx.any_within(q, r, backend=backend) == expected


def test_knn_cell_size_degenerate():
    assert knn_cell_size(np.zeros((10, 3)), 3) == 1.0
    assert knn_cell_size(np.zeros((1, 3)), 3) == 1.0
