import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from embclust.clustering import (ClusterConfig, GmmModel, TooManyClusters, cluster_fit, export_assignment,
                                 gmm_fit, import_assignment, kmeans_fit, load_gmm, predict, save_gmm)
from embclust.clustering.gmm import RIDGE, _fit_from_kmeans
from embclust.clustering.kmeans import kmeans_runs
from embclust.embedding import make_embedding
from embclust.evaluation import accuracy, nmi
from embclust.exceptions import ConfigError

from .synthetic import make_blobs


def test_kmeans_single_cluster_is_the_mean():
    x = np.random.default_rng(0).normal(size=(30, 3))
    assignment = kmeans_fit(make_embedding(x), 1, n_init=2)
    assert_array_equal(assignment.labels, np.zeros(30))
    assert_allclose(assignment.meta["centers"][0], x.mean(axis=0), atol=1e-12)


def test_kmeans_three_blobs(three_blobs):
    emb, y = three_blobs
    acc, _ = accuracy(y, kmeans_fit(emb, 3, seed=1).labels)
    assert acc == 1.0


def test_kmeans_one_point_per_cluster():
    x = np.array([[0.0, 0.0], [1.0, 5.0], [-3.0, 2.0], [4.0, 4.0]])
    assignment = kmeans_fit(make_embedding(x), 4, n_init=3)
    assert sorted(assignment.labels.tolist()) == [0, 1, 2, 3]
    assert assignment.meta["wcss"] == 0.0


def test_kmeans_wcss_never_increases():
    x = np.random.default_rng(1).normal(size=(300, 4))
    for run in kmeans_runs(x, 6, n_init=5, seed=2):
        assert np.all(np.diff(run.history) <= 1e-9 * run.history[0])


def test_kmeans_too_many_clusters():
    with pytest.raises(TooManyClusters):
        kmeans_fit(make_embedding(np.zeros((3, 2))), 4)


def test_gmm_recovers_two_gaussians():
    rng = np.random.default_rng(3)
    truth = np.array([[0.0, 0.0], [8.0, 0.0]])
    x = np.concatenate([truth[0] + rng.standard_normal((500, 2)), truth[1] + rng.standard_normal((500, 2))])
    y = np.repeat([0, 1], 500)
    model, assignment = gmm_fit(make_embedding(x), 2, n_init=3, seed=0)
    acc, mapping = accuracy(y, assignment.labels)
    assert acc == 1.0
    for cluster, label in mapping.items():
        assert np.linalg.norm(model.means[cluster] - truth[label]) < 0.1
    assert abs(model.weights.sum() - 1.0) < 1e-10
    for cov in model.covariances:
        assert_allclose(cov, cov.T, atol=1e-10)
        assert np.all(np.linalg.eigvalsh(cov) > 0)


def test_gmm_single_component_closed_form():
    x = np.random.default_rng(4).normal(size=(200, 3)) @ np.array([[2.0, 0, 0], [0.5, 1.0, 0], [0, 0, 0.3]])
    model, assignment = gmm_fit(make_embedding(x), 1, n_init=1)
    covariance = np.cov(x, rowvar=False, bias=True)
    ridge = RIDGE * np.trace(covariance) / 3
    assert_allclose(model.means[0], x.mean(axis=0), atol=1e-10)
    assert_allclose(model.covariances[0], covariance + ridge * np.eye(3), atol=1e-10)
    assert_array_equal(assignment.labels, np.zeros(200))


def test_em_log_likelihood_is_monotone():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        x, _ = make_blobs(40, rng.normal(scale=4.0, size=(3, 2)), seed=seed)
        for run in kmeans_runs(x, 3, n_init=1, seed=seed):
            model = _fit_from_kmeans(x, run)
            assert np.all(np.diff(model.ll_history) >= -1e-8)


def test_responsibilities_are_row_stochastic(three_blobs):
    emb, _ = three_blobs
    _, assignment = gmm_fit(emb, 3, n_init=2, seed=5)
    resp = assignment.responsibilities
    assert np.all((resp >= 0) & (resp <= 1))
    assert np.max(np.abs(resp.sum(axis=1) - 1.0)) < 1e-10
    assert_array_equal(np.argmax(resp, axis=1), assignment.labels)


def test_predict_on_training_data_reproduces_fit(three_blobs):
    emb, _ = three_blobs
    model, assignment = gmm_fit(emb, 3, n_init=2, seed=6)
    assert_array_equal(predict(model, emb).labels, assignment.labels)


def _two_component_model(means):
    return GmmModel(np.array([0.5, 0.5]), np.asarray(means, dtype=np.float64), np.array([np.eye(2), np.eye(2)]))


def test_predict_point_at_mean_and_tie():
    model = _two_component_model([[0.0, 0.0], [20.0, 0.0]])
    labels = predict(model, make_embedding([[20.0, 0.0], [0.0, 0.0]])).labels
    assert_array_equal(labels, [1, 0])
    identical = _two_component_model([[1.0, 1.0], [1.0, 1.0]])
    assert predict(identical, make_embedding([[3.0, -2.0]])).labels[0] == 0


def test_predict_dimension_mismatch():
    with pytest.raises(ConfigError):
        predict(_two_component_model([[0.0, 0.0], [1.0, 1.0]]), make_embedding(np.zeros((2, 3))))


def test_permuted_initialisation_permutes_labels(three_blobs):
    emb, y = three_blobs
    run = kmeans_runs(emb.coords, 3, n_init=1, seed=7)[0]
    order = np.array([2, 0, 1])
    inverse = np.argsort(order)
    permuted = run._replace(centers=run.centers[order], labels=inverse[run.labels])
    first = predict(_fit_from_kmeans(emb.coords, run), emb).labels
    second = predict(_fit_from_kmeans(emb.coords, permuted), emb).labels
    assert_array_equal(inverse[first], second)
    assert accuracy(y, first)[0] == accuracy(y, second)[0]
    assert nmi(y, first) == pytest.approx(nmi(y, second), abs=1e-12)


def test_model_and_assignment_files(tmp_path, three_blobs):
    emb, _ = three_blobs
    model, assignment = cluster_fit(emb, 3, ClusterConfig("gmm", n_init=2))
    restored = load_gmm(save_gmm(model, tmp_path / "gmm"))
    for name in ("weights", "means", "covariances"):
        assert_array_equal(getattr(restored, name), getattr(model, name))
    assert restored.ll_history == model.ll_history
    back = import_assignment(export_assignment(assignment, tmp_path / "assignment.csv"))
    assert_array_equal(back.labels, assignment.labels)
    assert_allclose(back.responsibilities, assignment.responsibilities, rtol=0, atol=0)


def test_parallel_restarts_match_sequential(three_blobs):
    emb, _ = three_blobs
    _, sequential = gmm_fit(emb, 3, n_init=4, seed=8)
    _, parallel = gmm_fit(emb, 3, n_init=4, seed=8, n_jobs=3)
    assert_array_equal(sequential.labels, parallel.labels)


def test_unknown_clusterer():
    with pytest.raises(ConfigError):
        cluster_fit(make_embedding(np.zeros((3, 1))), 1, ClusterConfig("spectral"))
