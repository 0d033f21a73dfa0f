import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.linalg import orthogonal_procrustes
from scipy.spatial.distance import cdist
from scipy.stats import spearmanr

from embclust.embedding import make_embedding
from embclust.exceptions import ConfigError
from embclust.manifold import IsomapConfig, IsomapLearner, MemoryGuardExceeded, isomap_fit, knn_graph
from embclust.manifold.learners.isomap import connect_components, geodesic_distances


def test_line_recovers_index_order():
    t = np.arange(30, dtype=np.float64)
    x = np.outer(t, [1.0, 2.0, 3.0])
    out = isomap_fit(make_embedding(x), IsomapConfig(n_components=1))
    assert abs(spearmanr(out.coords[:, 0], t)[0]) == pytest.approx(1.0)


def test_circle_arc_recovers_arc_length():
    angle = np.linspace(0.0, 1.5 * np.pi, 200)
    x = np.column_stack([np.cos(angle), np.sin(angle), np.zeros_like(angle)])
    out = isomap_fit(make_embedding(x), IsomapConfig(n_components=1))
    assert abs(spearmanr(out.coords[:, 0], angle)[0]) >= 0.99


def test_full_graph_matches_pca():
    x = np.random.default_rng(0).normal(size=(40, 3)) * [3.0, 2.0, 1.0]
    out = isomap_fit(make_embedding(x), IsomapConfig(n_neighbors=39, n_components=2))
    centred = x - x.mean(axis=0)
    u, s, _ = np.linalg.svd(centred, full_matrices=False)
    pca = u[:, :2] * s[:2]
    rotation, _ = orthogonal_procrustes(out.coords, pca)
    assert np.max(np.abs(out.coords @ rotation - pca)) < 1e-8


def test_geodesics_dominate_euclidean():
    x = np.random.default_rng(1).normal(size=(80, 3))
    emb = make_embedding(x)
    graph, _ = connect_components(x, knn_graph(emb, 6).union())
    geodesic = geodesic_distances(graph)
    assert_allclose(geodesic, geodesic.T, atol=1e-12)
    assert_array_equal(np.diag(geodesic), np.zeros(80))
    assert np.all(geodesic >= cdist(x, x) - 1e-9)
    assert_allclose(geodesic_distances(graph, n_jobs=3), geodesic)


def test_seeded_runs_identical():
    # more points than one Dijkstra source chunk, so the threaded path splits the work
    x = np.random.default_rng(5).normal(size=(300, 4))
    emb = make_embedding(x)
    cfg = IsomapConfig(n_neighbors=8, n_components=2, seed=3)
    first = isomap_fit(emb, cfg)
    second = isomap_fit(emb, cfg)
    threaded = IsomapLearner(cfg).fit(emb, n_jobs=3)
    assert np.array_equal(first.coords, second.coords)
    assert np.array_equal(first.coords, threaded.coords)

    graph, _ = connect_components(x, knn_graph(emb, 8).union())
    assert np.array_equal(geodesic_distances(graph, n_jobs=1), geodesic_distances(graph, n_jobs=3))


def test_disconnected_graph_is_bridged():
    rng = np.random.default_rng(2)
    x = np.concatenate([rng.normal(size=(15, 2)), 100.0 + rng.normal(size=(15, 2))])
    out = isomap_fit(make_embedding(x), IsomapConfig(n_neighbors=3, n_components=2))
    assert len(out.meta["bridges"]) >= 1
    assert np.all(np.isfinite(out.coords))


def test_excess_components_are_padded():
    x = np.outer(np.arange(6, dtype=np.float64), [1.0, 1.0])
    out = isomap_fit(make_embedding(x), IsomapConfig(n_neighbors=2, n_components=3))
    assert out.meta["padded_components"] == [1, 2]
    assert_array_equal(out.coords[:, 1:], np.zeros((6, 2)))


def test_duplicate_points_stay_connected():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    out = isomap_fit(make_embedding(x), IsomapConfig(n_neighbors=1, n_components=1))
    assert out.coords[0, 0] == pytest.approx(out.coords[1, 0], abs=1e-6)


def test_neighbour_count_and_guard():
    emb = make_embedding(np.random.default_rng(3).normal(size=(20, 2)))
    with pytest.raises(ConfigError):
        isomap_fit(emb, IsomapConfig(n_neighbors=20, n_components=1))
    with pytest.raises(MemoryGuardExceeded):
        isomap_fit(emb, IsomapConfig(n_components=1, max_samples=10))
