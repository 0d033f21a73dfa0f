import numpy as np
import pytest
from numpy.testing import assert_array_equal
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import least_squares

from embclust.manifold.learners import umap as umap_learner
from embclust.embedding import make_embedding
from embclust.evaluation import accuracy
from embclust.exceptions import ConfigError
from embclust.manifold import UmapConfig, fit_ab, knn_graph, umap_fit
from embclust.manifold.learners.umap import (MAX_AB_RMS, CurveFitError, _fit_ab_with_residual, fuzzy_simplicial_set,
                                             smooth_knn_dist)

from .synthetic import make_blobs


def _curve(d, a, b):
    return 1.0 / (1.0 + a * d ** (2 * b))


def two_blobs():
    return make_blobs(200, [[0.0] * 5, [10.0] + [0.0] * 4], seed=4)


def test_memberships_in_unit_interval_and_symmetric():
    x = np.random.default_rng(0).normal(size=(150, 6))
    graph = fuzzy_simplicial_set(make_embedding(x), UmapConfig(n_neighbors=10, n_components=2))
    weights = graph.weights
    assert np.all(weights.data > 0) and np.all(weights.data <= 1)
    assert abs(weights - weights.T).max() == 0
    nearest = graph.indices[:, 0]
    assert_array_equal(np.asarray(weights[np.arange(150), nearest]).ravel(), np.ones(150))


def test_bandwidth_calibration_hits_target():
    x = np.random.default_rng(1).normal(size=(120, 4))
    graph = knn_graph(make_embedding(x), 15)
    sigma, rho = smooth_knn_dist(graph.distances, 15)
    psum = np.exp(-np.maximum(graph.distances - rho[:, None], 0.0) / sigma[:, None]).sum(axis=1)
    assert np.max(np.abs(psum - np.log2(15))) < 1e-5
    assert_array_equal(rho, graph.distances[:, 0])


def test_fit_ab_matches_independent_least_squares():
    a, b = fit_ab(0.0, 1.0)
    d = np.linspace(0.0, 3.0, 301)[1:]
    target = np.exp(-d)
    oracle = least_squares(lambda p: _curve(d, p[0], p[1]) - target, x0=[2.0, 0.5]).x
    assert abs(a - oracle[0]) < 1e-3
    assert abs(b - oracle[1]) < 1e-3


def test_fitted_curve_shape():
    for min_dist in (0.0, 0.1, 0.5):
        a, b, residual = _fit_ab_with_residual(min_dist, 1.0)
        assert residual < MAX_AB_RMS
        assert _curve(1e-12, a, b) > 1.0 - 1e-6
        values = _curve(np.linspace(0.0, 3.0, 301)[1:], a, b)
        assert np.all(np.diff(values) <= 0)


def test_zero_min_dist_fit_within_bound():
    _, _, residual = _fit_ab_with_residual(0.0, 1.0)
    assert residual == pytest.approx(0.024, abs=0.003)
    assert residual < MAX_AB_RMS
    assert _fit_ab_with_residual(0.99, 1.0)[2] < MAX_AB_RMS
    a, b = fit_ab(0.0, 1.0)
    assert a > 0 and b > 0


def test_curve_fit_error_names_bound(monkeypatch):
    monkeypatch.setattr(umap_learner, "MAX_AB_RMS", 0.001)
    with pytest.raises(CurveFitError, match="MAX_AB_RMS=0.001") as caught:
        fit_ab(0.0, 1.0)
    assert caught.value.residual > 0.001


def test_fit_ab_rejects_bad_spread():
    with pytest.raises(ConfigError):
        fit_ab(0.0, 0.0)


def test_single_epoch_smoke():
    x = np.random.default_rng(2).normal(size=(80, 5))
    out = umap_fit(make_embedding(x), UmapConfig(n_neighbors=10, n_components=3, n_epochs=1))
    assert out.coords.shape == (80, 3)
    assert np.all(np.isfinite(out.coords))
    assert out.provenance == "manifold(umap)"


def test_invalid_neighbour_count():
    with pytest.raises(ConfigError):
        umap_fit(make_embedding(np.zeros((5, 2))), UmapConfig(n_neighbors=5, n_components=2))


@pytest.mark.parametrize("parallel", [False, True])
def test_two_blobs_separate(parallel):
    x, y = two_blobs()
    out = umap_fit(make_embedding(x), UmapConfig(n_components=2, seed=1, parallel=parallel))
    split = fcluster(linkage(out.coords, method="single"), 2, criterion="maxclust") - 1
    acc, _ = accuracy(y, split)
    assert acc == 1.0


def test_sequential_layout_is_reproducible():
    x, _ = two_blobs()
    cfg = UmapConfig(n_components=2, seed=3, n_epochs=50)
    first = umap_fit(make_embedding(x), cfg)
    second = umap_fit(make_embedding(x), cfg)
    assert_array_equal(first.coords, second.coords)
