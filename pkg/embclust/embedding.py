"""
embedding.py: the coordinate matrix passed between pipeline stages, with its provenance.
"""
import logging
import pathlib
from typing import NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from .container import load_container, save_container
from .exceptions import ConfigError

log = logging.getLogger(__name__)

RAW = "raw"
AUTOENCODED = "autoencoded"


def manifold_provenance(kind: str) -> str:
    return f"manifold({kind})"


class InvalidEmbedding(ConfigError):
    pass


class Embedding(NamedTuple):
    coords: np.ndarray
    provenance: str = RAW
    meta: Optional[dict] = None

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return self.coords.shape[1]


def make_embedding(coords, provenance: str = RAW, meta: Optional[dict] = None) -> Embedding:
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] < 1:
        raise InvalidEmbedding(f"embedding must be n×m with m >= 1, got shape {coords.shape}")
    if not np.all(np.isfinite(coords)):
        log.error("Embedding holds non-finite coordinates")
        raise InvalidEmbedding("embedding holds non-finite coordinates")
    return Embedding(coords, provenance, dict(meta or {}))


def from_dataset(features: np.ndarray) -> Embedding:
    return make_embedding(features, RAW)


def export_csv(
    emb: Embedding, path: Union[str, pathlib.Path], labels: Optional[np.ndarray] = None
) -> str:
    """Write dim_0..dim_{m-1} columns and an optional label column."""
    frame = pd.DataFrame(emb.coords, columns=[f"dim_{i}" for i in range(emb.m)])
    if labels is not None:
        frame["label"] = np.asarray(labels)
    frame.to_csv(path, index=False, float_format="%.17g")
    return str(path)


def import_csv(path: Union[str, pathlib.Path], provenance: str = RAW):
    """Read an embedding CSV. Returns (embedding, labels or None)."""
    frame = pd.read_csv(path)
    labels = frame.pop("label").to_numpy() if "label" in frame.columns else None
    dims = [c for c in frame.columns if c.startswith("dim_")]
    if len(dims) != frame.shape[1]:
        raise InvalidEmbedding(f"{path}: unexpected columns {list(frame.columns)}")
    return make_embedding(frame[dims].to_numpy(dtype=np.float64), provenance), labels


def save_embedding(emb: Embedding, path: Union[str, pathlib.Path]) -> str:
    return save_container(
        path, "embedding", {"provenance": emb.provenance, "meta": emb.meta or {}}, {"coords": emb.coords}
    )


def load_embedding(path: Union[str, pathlib.Path]) -> Embedding:
    meta, arrays = load_container(path, "embedding")
    return make_embedding(arrays["coords"], meta["provenance"], meta.get("meta"))
