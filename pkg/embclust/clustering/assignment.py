"""
assignment.py: hard cluster labels with optional soft responsibilities.
"""
import logging
import pathlib
from typing import NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from ..exceptions import ConfigError

log = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-10


class AssignmentError(ConfigError):
    pass


class ClusterAssignment(NamedTuple):
    labels: np.ndarray
    responsibilities: Optional[np.ndarray] = None
    meta: Optional[dict] = None

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def n_clusters(self) -> int:
        if self.responsibilities is not None:
            return self.responsibilities.shape[1]
        return int(self.labels.max()) + 1 if self.n else 0


def make_assignment(
    labels, responsibilities: Optional[np.ndarray] = None, meta: Optional[dict] = None
) -> ClusterAssignment:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or (labels.size and labels.min() < 0):
        raise AssignmentError("labels must be a 1-D vector of non-negative integers")
    if responsibilities is not None:
        responsibilities = np.asarray(responsibilities, dtype=np.float64)
        if responsibilities.shape[0] != labels.shape[0]:
            raise AssignmentError(
                f"{labels.shape[0]} labels but {responsibilities.shape[0]} responsibility rows"
            )
        sums = responsibilities.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            log.error("Responsibility rows do not sum to one")
            raise AssignmentError(f"responsibility rows deviate from 1 by {np.max(np.abs(sums - 1.0)):.3g}")
        if np.any(np.argmax(responsibilities, axis=1) != labels):
            raise AssignmentError("hard labels differ from the row-wise argmax of the responsibilities")
    return ClusterAssignment(labels, responsibilities, dict(meta or {}))


def export_assignment(assignment: ClusterAssignment, path: Union[str, pathlib.Path]) -> str:
    """Write index,hard_label[,resp_0..resp_{c-1}]."""
    frame = pd.DataFrame({"index": np.arange(assignment.n), "hard_label": assignment.labels})
    if assignment.responsibilities is not None:
        for j in range(assignment.responsibilities.shape[1]):
            frame[f"resp_{j}"] = assignment.responsibilities[:, j]
    frame.to_csv(path, index=False, float_format="%.17g")
    return str(path)


def import_assignment(path: Union[str, pathlib.Path]) -> ClusterAssignment:
    frame = pd.read_csv(path)
    if list(frame.columns[:2]) != ["index", "hard_label"]:
        log.error(f"{path} is not an assignment file")
        raise AssignmentError(f"{path}: expected columns index,hard_label, got {list(frame.columns)}")
    frame = frame.sort_values("index")
    resp_columns = [c for c in frame.columns if c.startswith("resp_")]
    responsibilities = frame[resp_columns].to_numpy(dtype=np.float64) if resp_columns else None
    return make_assignment(frame["hard_label"].to_numpy(), responsibilities)
