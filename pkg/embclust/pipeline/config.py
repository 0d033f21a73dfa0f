"""
config.py: run configuration, read from JSON or TOML and overridable from the command line.

A configuration file looks like

    dataset = "pendigits"          # registry name, or a table with path/label_column/c_hint
    ae = { epochs = 1000 }          # or "skip" to cluster raw data
    manifold = { kind = "umap", n_neighbors = 20, min_dist = 0.0 }
    clusterer = { kind = "gmm", n_init = 10 }
    seed = 0
    deterministic = false
"""
import json
import logging
import os
import pathlib

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import NamedTuple, Optional, Tuple, Union

from ..clustering import CLUSTERERS, ClusterConfig
from ..data import DATASETS
from ..data.dataset import PREPROCESS_MODES
from ..exceptions import ConfigError
from ..manifold import MANIFOLD_KINDS, learners
from ..settings import Runtime

log = logging.getLogger(__name__)

SKIP = "skip"


class DataConfig(NamedTuple):
    """A registered benchmark by name, or a CSV/IDX file given by path."""

    name: Optional[str] = None
    path: Optional[str] = None
    labels_path: Optional[str] = None
    label_column: Optional[str] = None
    preprocess: Optional[str] = None
    c_hint: Optional[int] = None

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return pathlib.Path(self.path).stem if self.path else "dataset"


class AeSettings(NamedTuple):
    """Autoencoder settings; layer widths of the input and bottleneck are resolved per run."""

    hidden_dims: Tuple[int, ...] = (500, 500, 2000)
    bottleneck_dim: Optional[int] = None
    epochs: int = 1000
    batch_size: int = 256
    learning_rate: float = 1e-3


class PipelineConfig(NamedTuple):
    dataset: DataConfig = DataConfig()
    ae: Optional[AeSettings] = AeSettings()
    manifold: str = "umap"
    manifold_params: Optional[dict] = None
    clusterer: ClusterConfig = ClusterConfig()
    seed: int = 0
    runtime: Runtime = Runtime()
    out: Optional[str] = None
    visualize: bool = False

    def validate(self) -> None:
        problems = []
        data = self.dataset
        if data.name is None and data.path is None:
            problems.append("a dataset name or path is required")
        if data.name is not None and data.name not in DATASETS:
            problems.append(f"unknown dataset '{data.name}', choose from {sorted(DATASETS)}")
        for path in (data.path, data.labels_path):
            if path is not None and not os.path.isfile(path):
                problems.append(f"file {path} not found")
        if data.preprocess is not None and data.preprocess not in PREPROCESS_MODES:
            problems.append(f"preprocess must be one of {PREPROCESS_MODES}")
        if self.manifold not in MANIFOLD_KINDS:
            problems.append(f"manifold must be one of {MANIFOLD_KINDS}, got '{self.manifold}'")
        elif self.manifold_params:
            fields = learners[self.manifold].config_type._fields if self.manifold in learners else ()
            unknown = set(self.manifold_params) - set(fields)
            if unknown:
                problems.append(f"unknown {self.manifold} parameters: {sorted(unknown)}")
        if self.clusterer.kind not in CLUSTERERS:
            problems.append(f"clusterer must be one of {CLUSTERERS}, got '{self.clusterer.kind}'")
        if self.clusterer.n_init < 1:
            problems.append(f"n_init must be >= 1, got {self.clusterer.n_init}")
        if self.ae is not None and (self.ae.epochs < 1 or self.ae.batch_size < 1):
            problems.append("autoencoder epochs and batch_size must be >= 1")
        if self.runtime.precision not in ("float64", "float32"):
            problems.append(f"precision must be float64 or float32, got {self.runtime.precision}")
        if problems:
            log.error("Invalid pipeline configuration: " + "; ".join(problems))
            raise ConfigError("; ".join(problems))


def _build(type_, raw: dict, section: str):
    unknown = set(raw) - set(type_._fields)
    if unknown:
        log.error(f"Unknown keys in [{section}]: {sorted(unknown)}")
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")
    return type_(**raw)


def config_from_dict(raw: dict) -> PipelineConfig:
    raw = dict(raw)
    known = {
        "dataset", "ae", "manifold", "clusterer", "seed", "deterministic", "threads",
        "precision", "out", "visualize",
    }
    unknown = set(raw) - known
    if unknown:
        log.error(f"Unknown configuration keys: {sorted(unknown)}")
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

    dataset = raw.get("dataset", {})
    if isinstance(dataset, str):
        dataset = {"name": dataset} if dataset in DATASETS or not os.path.exists(dataset) else {"path": dataset}
    dataset = _build(DataConfig, dataset, "dataset")

    ae = raw.get("ae", {})
    if ae == SKIP or ae is None:
        ae_settings = None
    else:
        ae = dict(ae)
        if "hidden_dims" in ae:
            ae["hidden_dims"] = tuple(int(w) for w in ae["hidden_dims"])
        ae_settings = _build(AeSettings, ae, "ae")

    manifold = raw.get("manifold", "umap")
    params = None
    if isinstance(manifold, dict):
        params = dict(manifold)
        manifold = params.pop("kind", "umap")
        params = params or None

    clusterer = raw.get("clusterer", "gmm")
    if isinstance(clusterer, str):
        clusterer = {"kind": clusterer}
    clusterer = _build(ClusterConfig, clusterer, "clusterer")

    runtime = Runtime(
        deterministic=bool(raw.get("deterministic", False)),
        threads=int(raw.get("threads", 0)),
        precision=raw.get("precision", "float64"),
    )
    return PipelineConfig(
        dataset=dataset,
        ae=ae_settings,
        manifold=manifold,
        manifold_params=params,
        clusterer=clusterer,
        seed=int(raw.get("seed", 0)),
        runtime=runtime,
        out=raw.get("out"),
        visualize=bool(raw.get("visualize", False)),
    )


def config_to_dict(cfg: PipelineConfig) -> dict:
    """Snapshot that config_from_dict reads back to an equal configuration."""
    dataset = {k: v for k, v in cfg.dataset._asdict().items() if v is not None}
    ae = SKIP if cfg.ae is None else {**cfg.ae._asdict(), "hidden_dims": list(cfg.ae.hidden_dims)}
    if cfg.ae is not None and cfg.ae.bottleneck_dim is None:
        del ae["bottleneck_dim"]
    snapshot = {
        "dataset": dataset,
        "ae": ae,
        "manifold": {"kind": cfg.manifold, **(cfg.manifold_params or {})},
        "clusterer": cfg.clusterer._asdict(),
        "seed": cfg.seed,
        "deterministic": cfg.runtime.deterministic,
        "threads": cfg.runtime.threads,
        "precision": cfg.runtime.precision,
        "visualize": cfg.visualize,
    }
    if cfg.out is not None:
        snapshot["out"] = cfg.out
    return snapshot


def load_config(path: Union[str, pathlib.Path]) -> PipelineConfig:
    """Read a .json or .toml configuration file."""
    path = pathlib.Path(path)
    if not path.is_file():
        log.error(f"Configuration file {path} not found")
        raise ConfigError(f"configuration file {path} not found")
    try:
        if path.suffix == ".toml":
            with open(path, "rb") as f:
                raw = tomllib.load(f)
        elif path.suffix == ".json":
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
        else:
            raise ConfigError(f"{path}: configuration must be .json or .toml")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        log.error(f"Cannot parse {path}: {e}")
        raise ConfigError(f"{path}: {e}")
    return config_from_dict(raw)
