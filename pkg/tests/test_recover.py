import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bfs_all_pairs
from userrec.network import from_lists
from userrec.provider import knn_provider
from userrec.recover import (RecoveryWarning, classical_mds, etp_pipeline, pairwise_distances,
                             procrustes_similarity, shortest_paths)


def test_path_graph_distance():
    d = shortest_paths(from_lists({0: [1], 1: [2], 2: []}, 3))
    assert d.values[0, 2] == 2 and d.values[2, 0] == 2 and not d.disconnected


def test_disconnected_pairs_capped():
    with pytest.warns(RecoveryWarning):
        d = shortest_paths(from_lists({0: [1], 1: [], 2: [3], 3: []}, 4))
    assert d.disconnected and d.values[0, 2] == 4


def test_distances_match_bfs():
    rng = np.random.default_rng(0)
    lists = {i: rng.choice([j for j in range(40) if j != i], size=2, replace=False).tolist() for i in range(40)}
    undirected = {i: set() for i in range(40)}
    for i, lst in lists.items():
        for j in lst:
            undirected[i].add(j)
            undirected[j].add(i)
    expected = bfs_all_pairs(undirected, 40)
    expected[np.isinf(expected)] = 40
    with np.errstate(all="ignore"):
        got = shortest_paths(from_lists(lists, 40)).values
    assert np.array_equal(got, expected)


def test_mds_collinear():
    x = np.array([[0.0], [1.0], [3.0]])
    emb = classical_mds(pairwise_distances(x), 1)
    assert np.allclose(pairwise_distances(emb.coords), pairwise_distances(x))


def test_mds_equilateral_triangle():
    emb = classical_mds(np.ones((3, 3)) - np.eye(3), 2)
    assert np.abs(pairwise_distances(emb.coords) - (np.ones((3, 3)) - np.eye(3))).max() < 1e-9


def test_mds_recovers_euclidean_points():
    x = np.random.default_rng(1).normal(size=(100, 2))
    emb = classical_mds(pairwise_distances(x), 2)
    assert procrustes_similarity(emb.coords, x).rmse < 1e-8


def test_mds_pads_missing_dimensions():
    d = np.ones((3, 3)) - np.eye(3)
    d[0, 1] = d[1, 0] = 3.0  # violates the triangle inequality, so B has a negative eigenvalue
    with pytest.warns(RecoveryWarning):
        emb = classical_mds(d, 2)
    assert emb.padded and np.all(emb.coords[:, 1] == 0)


def test_mds_extra_dimensions_vanish():
    emb = classical_mds(pairwise_distances(np.arange(5.0)[:, None]), 3)
    assert np.allclose(emb.coords[:, 1:], 0, atol=1e-6)


def rot(theta):
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


def test_procrustes_rotation_and_scale():
    x = np.random.default_rng(2).normal(size=(20, 2))
    y = 2.5 * x @ rot(0.7) + np.array([3.0, -1.0])
    al = procrustes_similarity(x, y)
    assert al.rmse < 1e-10 and al.scale == pytest.approx(2.5)


def test_procrustes_identity():
    x = np.random.default_rng(3).normal(size=(10, 3))
    al = procrustes_similarity(x, x)
    assert al.rmse < 1e-12 and np.allclose(al.rotation, np.eye(3))


def test_procrustes_reflection():
    x = np.random.default_rng(4).normal(size=(15, 2))
    assert procrustes_similarity(x, x * np.array([1.0, -1.0])).rmse < 1e-10


def test_procrustes_degenerate_source():
    with pytest.warns(RecoveryWarning):
        al = procrustes_similarity(np.zeros((4, 2)), np.eye(4)[:, :2])
    assert al.degenerate and al.scale == 0.0


@settings(max_examples=50)
@given(seed=st.integers(0, 10_000), theta=st.floats(0, 2 * np.pi), s=st.floats(0.1, 10),
       flip=st.booleans())
def test_procrustes_similarity_invariance(seed, theta, s, flip):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(12, 2)), rng.normal(size=(12, 2))
    base = procrustes_similarity(x, y).rmse
    z = s * x @ rot(theta) * (np.array([1.0, -1.0]) if flip else 1.0) + rng.normal(size=2)
    assert procrustes_similarity(z, y).rmse == pytest.approx(base, rel=1e-7, abs=1e-9)


def test_ring_recovery():
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    ring = np.c_[np.cos(t), np.sin(t)]
    _, diag = etp_pipeline(knn_provider(ring, 4, standardize_features=False), 2, truth=ring)
    assert diag.spearman >= 0.9


def test_toy_recovery_and_extra_dimensions():
    x = np.random.default_rng(5).uniform(size=(20, 2))
    emb, diag = etp_pipeline(knn_provider(x, 5, standardize_features=False), 2, truth=x)
    assert diag.spearman > 0.8 and emb.coords.shape == (20, 2)
    # K=1 on a line symmetrizes to a path, whose hop metric is one-dimensional
    line = np.c_[np.arange(20.0), np.zeros(20)]
    with np.errstate(all="ignore"):
        emb, _ = etp_pipeline(knn_provider(line, 1, standardize_features=False), 2)
    assert np.allclose(pairwise_distances(emb.coords[:, :1]), pairwise_distances(line))
    assert np.abs(emb.coords[:, 1]).max() < 1e-6
