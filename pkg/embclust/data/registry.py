"""
registry.py: benchmark datasets expected under the project data directory.
No downloading is done; files must be placed there beforehand.
"""
import logging
import os
from typing import NamedTuple, Optional, Tuple

import numpy as np

from ..exceptions import ConfigError
from .dataset import Dataset, PreprocessSpec, make_dataset
from .idx import read_idx_arrays
from .tabular import read_csv_arrays

log = logging.getLogger(__name__)


class StageMinutes(NamedTuple):
    """Published GPU wall-clock minutes, used only as an informational comparison."""

    ae: float
    manifold: float
    total: float


class DatasetEntry(NamedTuple):
    name: str
    loader: str  # "idx" or "csv"
    files: Tuple[Tuple[str, Optional[str]], ...]
    preprocess: PreprocessSpec
    n_clusters: int
    label_column: Optional[str] = None
    reference_minutes: Optional[StageMinutes] = None


DATASETS = {
    "mnist": DatasetEntry(
        "mnist",
        "idx",
        (
            ("train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"),
            ("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"),
        ),
        PreprocessSpec("image_unit_scale"),
        10,
        reference_minutes=StageMinutes(18.0, 1.5, 19.5),
    ),
    "mnist-test": DatasetEntry(
        "mnist-test",
        "idx",
        (("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"),),
        PreprocessSpec("image_unit_scale"),
        10,
        reference_minutes=StageMinutes(2.6, 0.4, 3.0),
    ),
    "fashion": DatasetEntry(
        "fashion",
        "idx",
        (
            ("fashion/train-images-idx3-ubyte.gz", "fashion/train-labels-idx1-ubyte.gz"),
            ("fashion/t10k-images-idx3-ubyte.gz", "fashion/t10k-labels-idx1-ubyte.gz"),
        ),
        PreprocessSpec("image_unit_scale"),
        10,
        reference_minutes=StageMinutes(18.0, 1.5, 19.5),
    ),
    "usps": DatasetEntry(
        "usps",
        "csv",
        (("usps.csv", None),),
        PreprocessSpec("per_feature_minmax"),
        10,
        label_column="-1",
        reference_minutes=StageMinutes(2.1, 0.4, 2.5),
    ),
    "pendigits": DatasetEntry(
        "pendigits",
        "csv",
        (("pendigits.tra", None), ("pendigits.tes", None)),
        PreprocessSpec("per_feature_minmax"),
        10,
        label_column="-1",
        reference_minutes=StageMinutes(2.2, 0.3, 2.5),
    ),
    "har": DatasetEntry(
        "har",
        "csv",
        (("har.csv", None),),
        PreprocessSpec("per_feature_minmax"),
        6,
        label_column="-1",
        reference_minutes=StageMinutes(3.6, 0.2, 3.8),
    ),
}


def _concatenate(parts, name: str, c_hint: int) -> Dataset:
    """Stack the splits of one dataset. Labels are remapped once, on the raw ids of all splits together."""
    widths = {features.shape[1] for features, _ in parts}
    if len(widths) > 1:
        log.error(f"{name}: splits have different feature counts {sorted(widths)}")
        raise ConfigError(f"{name}: splits disagree on the feature count {sorted(widths)}")
    features = np.concatenate([features for features, _ in parts])
    labels = None
    if all(raw is not None for _, raw in parts):
        labels = np.concatenate([raw for _, raw in parts])
    return make_dataset(features, labels, name=name, c_hint=c_hint)


def load_named(name: str, data_dir: str) -> Tuple[Dataset, DatasetEntry]:
    """Load one of the registered benchmark datasets from data_dir."""
    if name not in DATASETS:
        log.error(f"Unknown dataset: {name}")
        raise ConfigError(f"unknown dataset '{name}', choose from {sorted(DATASETS)}")
    entry = DATASETS[name]
    parts = []
    for features_file, labels_file in entry.files:
        features_path = os.path.join(data_dir, features_file)
        if not os.path.isfile(features_path):
            log.error(f"Missing data file {features_path}")
            raise ConfigError(f"{name}: file {features_path} not found")
        if entry.loader == "idx":
            parts.append(read_idx_arrays(features_path, os.path.join(data_dir, labels_file)))
        else:
            parts.append(read_csv_arrays(features_path, entry.label_column))
    return _concatenate(parts, name, entry.n_clusters), entry
