"""
neighbors.py: k-nearest-neighbour graph shared by every manifold learner.
"""
import logging
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse
from pynndescent import NNDescent
from scipy.spatial.distance import cdist

from ..embedding import Embedding
from ..exceptions import ConfigError

log = logging.getLogger(__name__)

KNN_MODES = ("exact", "approximate", "auto")
AUTO_EXACT_LIMIT = 20000
MIN_RECALL = 0.95
AUDIT_SAMPLE = 100
CHUNK_BYTES = 2 ** 28


class NeighborCountError(ConfigError):
    pass


class NeighborGraph(NamedTuple):
    """For each node, its k nearest neighbours sorted by ascending distance, self excluded."""

    indices: np.ndarray
    distances: np.ndarray
    weights: Optional[scipy.sparse.csr_matrix] = None

    @property
    def n(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        """Directed distance matrix, entry (i, j) for each neighbour j of i."""
        rows = np.repeat(np.arange(self.n), self.k)
        return scipy.sparse.csr_matrix(
            (self.distances.ravel(), (rows, self.indices.ravel())), shape=(self.n, self.n)
        )

    def union(self) -> scipy.sparse.csr_matrix:
        """Undirected distance graph keeping an edge if either endpoint lists the other."""
        directed = self.to_sparse()
        return directed.maximum(directed.T).tocsr()


def _rows_nearest(block: np.ndarray, offset: int, k: int):
    """k smallest entries per row, ties resolved by lower column index."""
    rows = np.arange(block.shape[0])
    block[rows, rows + offset] = np.inf
    threshold = np.partition(block, k - 1, axis=1)[:, k - 1]
    indices = np.empty((block.shape[0], k), dtype=np.int64)
    distances = np.empty((block.shape[0], k), dtype=np.float64)
    for r in rows:
        candidates = np.flatnonzero(block[r] <= threshold[r])
        order = np.lexsort((candidates, block[r, candidates]))[:k]
        indices[r] = candidates[order]
        distances[r] = block[r, indices[r]]
    return indices, distances


def exact_neighbors(x: np.ndarray, k: int):
    """Brute-force Euclidean scan in row chunks."""
    n = x.shape[0]
    chunk = max(1, CHUNK_BYTES // (8 * n))
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        block = cdist(x[start:stop], x, metric="euclidean")
        indices[start:stop], distances[start:stop] = _rows_nearest(block, start, k)
    return indices, distances


def approximate_neighbors(x: np.ndarray, k: int, seed: int, n_jobs: int = 1):
    """NN-descent graph with the self entry removed from each row."""
    index = NNDescent(
        x, n_neighbors=k + 1, metric="euclidean", random_state=seed, n_jobs=n_jobs,
        low_memory=True, verbose=False,
    )
    raw_indices, raw_distances = index.neighbor_graph
    n = x.shape[0]
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for i in range(n):
        keep = raw_indices[i] != i
        if keep.all():
            keep[-1] = False
        row_idx, row_dist = raw_indices[i][keep][:k], raw_distances[i][keep][:k].astype(np.float64)
        order = np.lexsort((row_idx, row_dist))
        indices[i], distances[i] = row_idx[order], row_dist[order]
    return indices, distances


def audit_recall(x: np.ndarray, graph: NeighborGraph, seed: int, sample: int = AUDIT_SAMPLE) -> float:
    """Fraction of true k-nearest neighbours found, over a seeded sample of nodes."""
    rng = np.random.default_rng(seed)
    nodes = rng.choice(graph.n, size=min(sample, graph.n), replace=False)
    block = cdist(x[nodes], x, metric="euclidean")
    block[np.arange(nodes.size), nodes] = np.inf
    found = 0
    for r, node in enumerate(nodes):
        truth = np.argpartition(block[r], graph.k - 1)[: graph.k]
        # a tie at the k-th distance makes any of the tied indices correct
        kth = np.max(block[r, truth])
        found += np.sum(block[r, graph.indices[node]] <= kth)
    return found / (nodes.size * graph.k)


def knn_graph(
    emb: Embedding, k: int, mode: str = "exact", seed: int = 0, n_jobs: int = 1
) -> NeighborGraph:
    """k-nearest-neighbour graph of the embedding rows (self excluded)."""
    n = emb.n
    if not 1 <= k < n:
        log.error(f"Cannot take {k} neighbours among {n} points")
        raise NeighborCountError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    if mode not in KNN_MODES:
        raise ConfigError(f"knn mode must be one of {KNN_MODES}, got {mode}")
    if mode == "auto":
        mode = "exact" if n <= AUTO_EXACT_LIMIT else "approximate"
    if mode == "exact":
        return NeighborGraph(*exact_neighbors(emb.coords, k))

    graph = NeighborGraph(*approximate_neighbors(emb.coords, k, seed, n_jobs))
    recall = audit_recall(emb.coords, graph, seed)
    log.info(f"Approximate kNN recall on {min(AUDIT_SAMPLE, n)} audited nodes: {recall:.3f}")
    if recall < MIN_RECALL:
        log.warning(f"kNN recall {recall:.3f} below {MIN_RECALL}, falling back to the exact scan")
        return NeighborGraph(*exact_neighbors(emb.coords, k))
    return graph
