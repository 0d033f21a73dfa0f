"""
gmm.py: full-covariance Gaussian mixture fitted by expectation maximisation.

Each restart starts from one k-means run (means at the centres, per-cluster sample
covariances, cluster fractions as weights). Responsibilities are computed in the
log domain. Every covariance gets a ridge of 1e-6 * trace(cov) / m on its diagonal;
when a Cholesky factorisation still fails the ridge is raised tenfold, at most three
times, and kept at that level for the rest of the restart.
"""
import logging
import pathlib
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from ..container import load_container, save_container
from ..embedding import Embedding
from ..exceptions import ConfigError, EmbclustError
from .assignment import ClusterAssignment, make_assignment
from .kmeans import KmeansRun, check_cluster_count, kmeans_runs

log = logging.getLogger(__name__)

MAX_ITER = 100
REL_TOL = 1e-3
RIDGE = 1e-6
RIDGE_GROWTH = 10.0
MAX_ESCALATIONS = 3
LOG_2PI = np.log(2.0 * np.pi)


class SingularCovariance(EmbclustError):
    def __init__(self, component: int, ridge: float, min_eigenvalue: float):
        super().__init__(
            f"covariance of component {component} is singular with ridge {ridge:.3g} "
            f"(smallest eigenvalue {min_eigenvalue:.3g})"
        )
        self.component = component
        self.ridge = ridge
        self.min_eigenvalue = min_eigenvalue


class GmmModel(NamedTuple):
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    converged: bool = False
    final_log_likelihood: float = -np.inf
    n_iter: int = 0
    ll_history: Tuple[float, ...] = ()

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def _cholesky_factors(covariances: np.ndarray) -> List[np.ndarray]:
    return [scipy.linalg.cholesky(cov, lower=True) for cov in covariances]


def _log_gaussians(x: np.ndarray, means: np.ndarray, factors: List[np.ndarray]) -> np.ndarray:
    """n×c matrix of log N(x_i | mean_k, L_k L_k^T)."""
    n, m = x.shape
    out = np.empty((n, means.shape[0]))
    for k, chol in enumerate(factors):
        solved = scipy.linalg.solve_triangular(chol, (x - means[k]).T, lower=True)
        log_det = 2.0 * np.sum(np.log(np.diag(chol)))
        out[:, k] = -0.5 * (m * LOG_2PI + log_det + np.sum(solved ** 2, axis=0))
    return out


def _e_step(x, weights, means, factors) -> Tuple[np.ndarray, float]:
    weighted = _log_gaussians(x, means, factors) + np.log(weights)
    norm = logsumexp(weighted, axis=1)
    return weighted - norm[:, None], float(norm.sum())


def _regularised(cov: np.ndarray, fallback_trace: float, scale: float) -> np.ndarray:
    m = cov.shape[0]
    trace = np.trace(cov)
    # a component collapsed onto one point borrows the data scale
    ridge = RIDGE * scale * (trace if trace > 0 else fallback_trace) / m
    cov = (cov + cov.T) / 2.0
    return cov + ridge * np.eye(m)


class _Regulariser(object):
    """Ridge state of one restart."""

    def __init__(self, data_trace: float):
        self.data_trace = data_trace
        self.scale = 1.0
        self.escalations = 0

    def covariances(self, raw: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
        while True:
            covs = np.array([_regularised(cov, self.data_trace, self.scale) for cov in raw])
            try:
                return covs, _cholesky_factors(covs)
            except np.linalg.LinAlgError:
                bad = self._first_singular(covs)
                if self.escalations >= MAX_ESCALATIONS:
                    ridge = RIDGE * self.scale * np.trace(raw[bad]) / raw.shape[1]
                    min_eig = float(np.linalg.eigvalsh(covs[bad])[0])
                    log.error(f"GMM: component {bad} singular after {self.escalations} ridge escalations")
                    raise SingularCovariance(bad, ridge, min_eig)
                self.scale *= RIDGE_GROWTH
                self.escalations += 1
                log.warning(f"GMM: component {bad} not positive definite, ridge scale raised to {self.scale:g}")

    @staticmethod
    def _first_singular(covs: np.ndarray) -> int:
        for k, cov in enumerate(covs):
            try:
                scipy.linalg.cholesky(cov, lower=True)
            except np.linalg.LinAlgError:
                return k
        return 0


def _sample_statistics(x: np.ndarray, resp: np.ndarray):
    """Weights, means and unregularised covariances from soft assignments."""
    n = x.shape[0]
    nk = resp.sum(axis=0) + 10.0 * np.finfo(np.float64).eps
    means = (resp.T @ x) / nk[:, None]
    raw = np.empty((resp.shape[1], x.shape[1], x.shape[1]))
    for k in range(resp.shape[1]):
        diff = x - means[k]
        raw[k] = (resp[:, k, None] * diff).T @ diff / nk[k]
    return nk / n, means, raw


def _fit_from_kmeans(x: np.ndarray, run: KmeansRun) -> GmmModel:
    c = run.centers.shape[0]
    regulariser = _Regulariser(float(np.trace(np.atleast_2d(np.cov(x, rowvar=False, bias=True)))))
    hard = np.zeros((x.shape[0], c))
    hard[np.arange(x.shape[0]), run.labels] = 1.0
    weights, _, raw = _sample_statistics(x, hard)
    means = run.centers.copy()
    covariances, factors = regulariser.covariances(raw)

    history = []
    converged = False
    n_iter = 0
    log_resp = None
    for n_iter in range(1, MAX_ITER + 1):
        log_resp, ll = _e_step(x, weights, means, factors)
        history.append(ll)
        if len(history) > 1 and history[-1] - history[-2] < REL_TOL * abs(history[-1]):
            converged = True
            break
        weights, means, raw = _sample_statistics(x, np.exp(log_resp))
        covariances, factors = regulariser.covariances(raw)
    if not converged:
        # parameters moved after the last recorded likelihood
        log_resp, ll = _e_step(x, weights, means, factors)
        history.append(ll)
    return GmmModel(weights, means, covariances, converged, history[-1], n_iter, tuple(history))


def _responsibilities(model: GmmModel, x: np.ndarray) -> Tuple[np.ndarray, float]:
    log_resp, ll = _e_step(x, model.weights, model.means, _cholesky_factors(model.covariances))
    resp = np.exp(log_resp)
    resp /= resp.sum(axis=1, keepdims=True)
    return resp, ll


def predict(model: GmmModel, emb: Embedding) -> ClusterAssignment:
    """Responsibilities under the model; hard labels by argmax, lower index on ties."""
    if emb.m != model.dim:
        log.error(f"Embedding has {emb.m} columns, model expects {model.dim}")
        raise ConfigError(f"dimension mismatch: embedding m={emb.m}, model m={model.dim}")
    resp, ll = _responsibilities(model, emb.coords)
    return make_assignment(np.argmax(resp, axis=1), resp, {"clusterer": "gmm", "log_likelihood": ll})


def gmm_fit(
    emb: Embedding, c: int, n_init: int = 10, seed: int = 0, n_jobs: int = 1
) -> Tuple[GmmModel, ClusterAssignment]:
    """Best of n_init EM restarts by final log-likelihood."""
    if n_init < 1:
        raise ConfigError(f"n_init must be >= 1, got {n_init}")
    check_cluster_count(c, emb.n)
    x = emb.coords
    runs = kmeans_runs(x, c, n_init, seed, n_jobs)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as executor:
            models = list(executor.map(lambda run: _fit_from_kmeans(x, run), runs))
    else:
        models = [_fit_from_kmeans(x, run) for run in runs]
    index, model = max(enumerate(models), key=lambda item: (item[1].final_log_likelihood, -item[0]))
    log.info(
        f"GMM: c={c}, best log-likelihood {model.final_log_likelihood:.6g} from restart {index} "
        f"({model.n_iter} iterations, converged={model.converged})"
    )
    assignment = predict(model, emb)
    assignment.meta.update(
        {
            "restart": index,
            "init": "kmeans++ / lloyd",
            "converged": model.converged,
            "ll_history": list(model.ll_history),
            "restart_log_likelihood": [m.final_log_likelihood for m in models],
        }
    )
    return model, assignment


def save_gmm(model: GmmModel, path: Union[str, pathlib.Path]) -> str:
    meta = {
        "converged": model.converged,
        "final_log_likelihood": model.final_log_likelihood,
        "n_iter": model.n_iter,
        "ll_history": list(model.ll_history),
    }
    return save_container(
        path, "gmm", meta,
        {"weights": model.weights, "means": model.means, "covariances": model.covariances},
    )


def load_gmm(path: Union[str, pathlib.Path]) -> GmmModel:
    meta, arrays = load_container(path, "gmm")
    return GmmModel(
        arrays["weights"], arrays["means"], arrays["covariances"], bool(meta["converged"]),
        float(meta["final_log_likelihood"]), int(meta["n_iter"]), tuple(meta["ll_history"]),
    )
