"""
kmeans.py: Lloyd's algorithm with k-means++ seeding and best-of-n restarts.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus

from ..embedding import Embedding
from ..exceptions import ConfigError
from .assignment import ClusterAssignment, make_assignment

log = logging.getLogger(__name__)

MAX_ITER = 300
SHIFT_TOL = 1e-6


class TooManyClusters(ConfigError):
    def __init__(self, c: int, n: int):
        super().__init__(f"cannot form {c} clusters from {n} points")
        self.c = c
        self.n = n


class KmeansRun(NamedTuple):
    centers: np.ndarray
    labels: np.ndarray
    wcss: float
    history: List[float]
    n_iter: int
    seed: int


def check_cluster_count(c: int, n: int) -> None:
    if c < 1 or c > n:
        log.error(f"Requested {c} clusters for {n} points")
        raise TooManyClusters(c, n)


def restart_seeds(seed: int, n_init: int) -> List[int]:
    """Independent per-restart seeds derived from one run seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n_init)]


def _assign(x: np.ndarray, centers: np.ndarray):
    sq = cdist(x, centers, "sqeuclidean")
    labels = np.argmin(sq, axis=1)
    return labels, sq[np.arange(x.shape[0]), labels]


def _repair_empty(x, centers, labels, own_sq):
    """Move each empty cluster's centre onto the point farthest from its own centre."""
    c = centers.shape[0]
    counts = np.bincount(labels, minlength=c)
    for j in np.flatnonzero(counts == 0):
        movable = counts[labels] > 1
        candidates = np.where(movable, own_sq, -np.inf)
        far = int(np.argmax(candidates))
        log.debug(f"k-means: cluster {j} empty, reseeded at point {far}")
        counts[labels[far]] -= 1
        counts[j] = 1
        labels[far] = j
        own_sq[far] = 0.0
        centers[j] = x[far]
    return labels, own_sq


def lloyd(x: np.ndarray, centers: np.ndarray, seed: int = 0) -> KmeansRun:
    centers = centers.astype(np.float64, copy=True)
    c = centers.shape[0]
    history = []
    n_iter = 0
    for n_iter in range(1, MAX_ITER + 1):
        labels, own_sq = _assign(x, centers)
        labels, own_sq = _repair_empty(x, centers, labels, own_sq)
        history.append(float(own_sq.sum()))
        updated = np.empty_like(centers)
        for j in range(c):
            updated[j] = x[labels == j].mean(axis=0)
        shift = np.max(np.linalg.norm(updated - centers, axis=1))
        centers = updated
        if shift < SHIFT_TOL:
            break
    labels, own_sq = _assign(x, centers)
    labels, own_sq = _repair_empty(x, centers, labels, own_sq)
    wcss = float(own_sq.sum())
    history.append(wcss)
    return KmeansRun(centers, labels, wcss, history, n_iter, seed)


def _single_run(x: np.ndarray, c: int, seed: int) -> KmeansRun:
    initial, _ = kmeans_plusplus(x, c, random_state=seed)
    return lloyd(x, initial, seed)


def kmeans_runs(x: np.ndarray, c: int, n_init: int = 10, seed: int = 0, n_jobs: int = 1) -> List[KmeansRun]:
    """All restarts, in seed order."""
    check_cluster_count(c, x.shape[0])
    seeds = restart_seeds(seed, n_init)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as executor:
            return list(executor.map(lambda s: _single_run(x, c, s), seeds))
    return [_single_run(x, c, s) for s in seeds]


def best_run(runs: List[KmeansRun]) -> KmeansRun:
    # lowest WCSS, earliest restart on ties
    return min(enumerate(runs), key=lambda item: (item[1].wcss, item[0]))[1]


def kmeans_fit(emb: Embedding, c: int, n_init: int = 10, seed: int = 0, n_jobs: int = 1) -> ClusterAssignment:
    if n_init < 1:
        raise ConfigError(f"n_init must be >= 1, got {n_init}")
    runs = kmeans_runs(emb.coords, c, n_init, seed, n_jobs)
    best = best_run(runs)
    log.info(f"k-means: c={c}, best WCSS {best.wcss:.6g} after {best.n_iter} iterations over {n_init} restarts")
    return make_assignment(
        best.labels,
        meta={
            "clusterer": "kmeans",
            "centers": best.centers.tolist(),
            "wcss": best.wcss,
            "wcss_history": best.history,
            "restart_wcss": [run.wcss for run in runs],
        },
    )
