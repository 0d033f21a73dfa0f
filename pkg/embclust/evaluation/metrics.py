"""
metrics.py: clustering accuracy under the best cluster-to-label matching, and NMI.
"""
import logging
from typing import Dict, NamedTuple, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import entropy
from sklearn.metrics import mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

from ..exceptions import ConfigError

log = logging.getLogger(__name__)

TIMING_FIELDS = ("ae", "manifold", "cluster", "total")


class LabelLengthMismatch(ConfigError):
    pass


class ContingencyTable(NamedTuple):
    """counts[i, j]: points with true label true_ids[i] and cluster pred_ids[j]."""

    counts: np.ndarray
    true_ids: np.ndarray
    pred_ids: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def contingency(y, c) -> ContingencyTable:
    y = np.asarray(y).ravel()
    c = np.asarray(c).ravel()
    if y.shape[0] != c.shape[0]:
        log.error(f"Label vectors differ in length: {y.shape[0]} vs {c.shape[0]}")
        raise LabelLengthMismatch(f"{y.shape[0]} true labels but {c.shape[0]} predicted labels")
    if y.shape[0] == 0:
        raise LabelLengthMismatch("empty label vectors")
    counts = contingency_matrix(y, c).astype(np.int64)
    return ContingencyTable(counts, np.unique(y), np.unique(c))


def hungarian(cost) -> np.ndarray:
    """Column assigned to each row in the minimum-cost assignment.

    Rectangular matrices are padded with zero rows or columns to square.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ConfigError(f"cost must be a matrix, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        log.error("Assignment cost holds non-finite entries")
        raise ConfigError("cost matrix holds non-finite entries")
    k = max(cost.shape)
    square = np.zeros((k, k))
    square[: cost.shape[0], : cost.shape[1]] = cost
    rows, cols = linear_sum_assignment(square)
    permutation = np.empty(k, dtype=np.int64)
    permutation[rows] = cols
    return permutation


def assignment_cost(cost, permutation: np.ndarray) -> float:
    cost = np.asarray(cost, dtype=np.float64)
    k = max(cost.shape)
    square = np.zeros((k, k))
    square[: cost.shape[0], : cost.shape[1]] = cost
    return float(square[np.arange(k), permutation].sum())


def accuracy(y, c):
    """Returns (acc, mapping) with mapping from cluster id to the matched label id."""
    table = contingency(y, c)
    # rows are clusters so the permutation reads cluster -> label
    permutation = hungarian(-table.counts.T)
    n_true, n_pred = table.counts.shape
    mapping = {}
    matched = 0
    for j in range(n_pred):
        i = permutation[j]
        if i < n_true:
            mapping[table.pred_ids[j].item()] = table.true_ids[i].item()
            matched += table.counts[i, j]
    return matched / table.n, mapping


def nmi(y, c) -> float:
    """2 I(y, c) / (H(y) + H(c)) in nats."""
    table = contingency(y, c)
    h_true = entropy(table.counts.sum(axis=1))
    h_pred = entropy(table.counts.sum(axis=0))
    if h_true == 0.0 and h_pred == 0.0:
        return 1.0
    if h_true == 0.0 or h_pred == 0.0:
        return 0.0
    mutual = mutual_info_score(None, None, contingency=table.counts)
    return float(np.clip(2.0 * mutual / (h_true + h_pred), 0.0, 1.0))


class MetricsReport(NamedTuple):
    acc: float
    nmi: float
    mapping: Dict[int, int]
    timings: Dict[str, float]

    def to_json(self) -> dict:
        return {
            "acc": self.acc,
            "nmi": self.nmi,
            "mapping": {str(k): v for k, v in self.mapping.items()},
            "timings": {f"{field}_s": self.timings.get(field, 0.0) for field in TIMING_FIELDS},
        }


def evaluate(y, c, timings: Optional[Dict[str, float]] = None) -> MetricsReport:
    acc, mapping = accuracy(y, c)
    return MetricsReport(float(acc), nmi(y, c), mapping, dict(timings or {}))
