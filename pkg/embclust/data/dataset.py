"""
dataset.py: canonical in-memory dataset and its preprocessing rules.
"""
import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np

from ..exceptions import ConfigError

log = logging.getLogger(__name__)

PREPROCESS_MODES = ("image_unit_scale", "per_feature_minmax", "none")


class InvalidDataset(ConfigError):
    pass


class PreprocessError(ConfigError):
    pass


class Dataset(NamedTuple):
    """n×d feature matrix with optional integer labels in [0, c)."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "dataset"
    c_hint: Optional[int] = None

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_clusters(self) -> Optional[int]:
        """Cluster count from the labels when present, else c_hint. Never inferred."""
        if self.labels is not None:
            return int(self.labels.max()) + 1
        return self.c_hint


class PreprocessSpec(NamedTuple):
    mode: str = "none"

    def validate(self) -> None:
        if self.mode not in PREPROCESS_MODES:
            log.error(f"Unknown preprocessing mode: {self.mode}")
            raise ConfigError(f"preprocess mode must be one of {PREPROCESS_MODES}")


def remap_labels(labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Map arbitrary integer labels onto 0..c-1 by sorted value. Returns (remapped, original ids)."""
    classes, remapped = np.unique(np.asarray(labels), return_inverse=True)
    return remapped.astype(np.int64), classes


def make_dataset(
    features,
    labels=None,
    name: str = "dataset",
    c_hint: Optional[int] = None,
) -> Dataset:
    """Validate raw arrays and build a Dataset, remapping labels to a contiguous range."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        log.error(f"{name}: features must be a non-empty 2-D matrix, got shape {x.shape}")
        raise InvalidDataset(f"{name}: bad feature shape {x.shape}")
    if not np.all(np.isfinite(x)):
        bad_row = int(np.argwhere(~np.isfinite(x))[0, 0])
        log.error(f"{name}: non-finite feature value in row {bad_row}")
        raise InvalidDataset(f"{name}: non-finite value in row {bad_row}")

    y = None
    if labels is not None:
        y = np.asarray(labels).reshape(-1)
        if y.shape[0] != x.shape[0]:
            raise InvalidDataset(
                f"{name}: {y.shape[0]} labels for {x.shape[0]} samples"
            )
        y, _ = remap_labels(y)
        n_classes = int(y.max()) + 1
        if c_hint is not None and c_hint != n_classes:
            log.error(f"{name}: declared {c_hint} clusters but labels have {n_classes}")
            raise InvalidDataset(f"{name}: c_hint {c_hint} != {n_classes} distinct labels")
    if c_hint is not None and c_hint < 1:
        raise InvalidDataset(f"{name}: c_hint must be positive")
    return Dataset(features=x, labels=y, name=name, c_hint=c_hint)


def preprocess(ds: Dataset, spec: PreprocessSpec) -> Dataset:
    """Scale features. Labels are carried over unchanged."""
    spec.validate()
    x = ds.features
    if spec.mode == "image_unit_scale":
        if x.min() < 0 or x.max() > 255:
            log.error(f"{ds.name}: image_unit_scale needs raw values in [0, 255]")
            raise PreprocessError(
                f"{ds.name}: values span [{x.min()}, {x.max()}], expected [0, 255]"
            )
        x = x / 255.0
    elif spec.mode == "per_feature_minmax":
        lo = x.min(axis=0)
        span = x.max(axis=0) - lo
        constant = span == 0
        # constant columns map to 0
        x = (x - lo) / np.where(constant, 1.0, span)
        x[:, constant] = 0.0
    else:
        x = x.copy()
    log.debug(f"{ds.name}: preprocessed with {spec.mode}")
    return ds._replace(features=x)
