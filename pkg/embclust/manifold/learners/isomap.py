"""
isomap.py: geodesic distances over a neighbour graph followed by classical scaling.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial.distance import cdist

from ...embedding import Embedding, make_embedding, manifold_provenance
from ...exceptions import ConfigError
from ..neighbors import knn_graph
from .base_learner import ManifoldLearner

log = logging.getLogger(__name__)

MIN_EDGE = 1e-12
SOURCE_CHUNK = 256
EIGEN_TOL = 1e-12


class IsomapConfig(NamedTuple):
    n_neighbors: int = 5
    n_components: Optional[int] = None
    knn_mode: str = "auto"
    max_samples: Optional[int] = 30000
    seed: int = 0


def _nearest_foreign_pair(x: np.ndarray, labels: np.ndarray) -> Tuple[int, int, float]:
    """Globally shortest edge joining two different components, lowest indices on ties."""
    n = x.shape[0]
    chunk = max(1, 2 ** 24 // n)
    best = (np.inf, -1, -1)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        block = cdist(x[start:stop], x)
        block[labels[start:stop, None] == labels[None, :]] = np.inf
        flat = int(np.argmin(block))
        r, c = divmod(flat, n)
        if block[r, c] < best[0]:
            best = (block[r, c], start + r, c)
    distance, i, j = best
    return i, j, float(distance)


def connect_components(
    x: np.ndarray, graph: scipy.sparse.csr_matrix
) -> Tuple[scipy.sparse.csr_matrix, List[Tuple[int, int, float]]]:
    """Add bridging edges until the undirected graph is connected."""
    graph = graph.tolil()
    bridges = []
    n_comp, labels = connected_components(graph, directed=False)
    while n_comp > 1:
        i, j, distance = _nearest_foreign_pair(x, labels)
        weight = max(distance, MIN_EDGE)
        graph[i, j] = weight
        graph[j, i] = weight
        bridges.append((i, j, distance))
        log.info(f"Isomap: {n_comp} components, bridging {i} -- {j} at distance {distance:.6g}")
        n_comp, labels = connected_components(graph.tocsr(), directed=False)
    return graph.tocsr(), bridges


def geodesic_distances(graph: scipy.sparse.csr_matrix, n_jobs: int = 1) -> np.ndarray:
    """All-pairs shortest paths by Dijkstra from every source."""
    n = graph.shape[0]
    if n_jobs <= 1:
        return shortest_path(graph, method="D", directed=False)
    chunks = [np.arange(s, min(n, s + SOURCE_CHUNK)) for s in range(0, n, SOURCE_CHUNK)]
    with ThreadPoolExecutor(max_workers=n_jobs) as executor:
        parts = list(
            executor.map(lambda rows: shortest_path(graph, method="D", directed=False, indices=rows), chunks)
        )
    return np.vstack(parts)


def classical_mds(distances: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Coordinates from the top m eigenpairs of B = -1/2 J D^2 J.

    Returns the coordinates and the eigenvalues in descending order. Components with a
    non-positive (or numerically zero) eigenvalue are zero.
    """
    n = distances.shape[0]
    sq = distances ** 2
    row_mean = sq.mean(axis=1, keepdims=True)
    b = -0.5 * (sq - row_mean - row_mean.T + sq.mean())
    b = (b + b.T) / 2.0
    top = min(m, n)
    eigvals, eigvecs = scipy.linalg.eigh(b, subset_by_index=[n - top, n - 1])
    eigvals, eigvecs = eigvals[::-1], eigvecs[:, ::-1]
    # sign convention: the largest-magnitude entry of each eigenvector is positive
    pivots = np.argmax(np.abs(eigvecs), axis=0)
    eigvecs = eigvecs * np.sign(eigvecs[pivots, np.arange(top)])
    eigvals = np.where(eigvals > EIGEN_TOL * max(eigvals[0], 0.0), eigvals, 0.0)
    coords = np.zeros((n, m))
    coords[:, :top] = eigvecs * np.sqrt(eigvals)
    return coords, np.concatenate([eigvals, np.zeros(m - top)])


class IsomapLearner(ManifoldLearner):
    name = "isomap"
    config_type = IsomapConfig

    def validate(self, n: int) -> None:
        cfg = self.config
        if not 1 <= cfg.n_neighbors < n:
            log.error(f"Isomap cannot use {cfg.n_neighbors} neighbours among {n} points")
            raise ConfigError(f"n_neighbors must satisfy 1 <= k < n, got {cfg.n_neighbors} (n={n})")
        if cfg.n_components is None or cfg.n_components < 1:
            raise ConfigError(f"n_components must be resolved to >= 1, got {cfg.n_components}")
        self.guard(n, cfg.max_samples)

    def fit(self, emb: Embedding, n_jobs: int = 1) -> Embedding:
        cfg = self.config
        self.validate(emb.n)
        neighbors = knn_graph(emb, cfg.n_neighbors, mode=cfg.knn_mode, seed=cfg.seed, n_jobs=n_jobs)
        # zero-length edges between duplicates must survive the sparse format
        neighbors = neighbors._replace(distances=np.maximum(neighbors.distances, MIN_EDGE))
        graph, bridges = connect_components(emb.coords, neighbors.union())
        log.info(f"Isomap: n={emb.n}, k={cfg.n_neighbors}, m={cfg.n_components}, {len(bridges)} bridges")

        geodesic = geodesic_distances(graph, n_jobs=n_jobs)
        coords, eigvals = classical_mds(geodesic, cfg.n_components)
        padded = [int(i) for i in np.flatnonzero(eigvals <= 0.0)]
        if padded:
            log.warning(f"Isomap: components {padded} have non-positive eigenvalues, padded with zeros")
        return make_embedding(
            coords,
            manifold_provenance(self.name),
            {
                "eigenvalues": eigvals.tolist(),
                "padded_components": padded,
                "bridges": [[i, j, d] for i, j, d in bridges],
            },
        )


def isomap_fit(emb: Embedding, cfg: IsomapConfig) -> Embedding:
    return IsomapLearner(cfg).fit(emb)
