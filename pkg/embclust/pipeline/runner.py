"""
runner.py: the staged run. Load, autoencode, re-embed, cluster, evaluate, export.
"""
import json
import logging
import os
from contextlib import contextmanager
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
import torch

from ..autoencoder import AeConfig, encode, init, reconstruction_mse, save_checkpoint, train
from ..clustering import ClusterAssignment, GmmModel, cluster_fit, export_assignment, save_gmm
from ..data import Dataset, PreprocessSpec, load_csv, load_idx, load_named, preprocess
from ..data.registry import DatasetEntry
from ..embedding import Embedding, export_csv, from_dataset, save_embedding
from ..evaluation import MetricsReport, StageTimer, evaluate
from ..exceptions import ConfigError, StageError
from ..manifold import manifold_fit
from ..settings import apply_runtime, check_root_path, read_directories_from_root
from .config import PipelineConfig, config_to_dict
from .visualization import export_visualization

log = logging.getLogger(__name__)

STAGES = ("ae", "manifold", "cluster", "total")


class RunReport(NamedTuple):
    metrics: Optional[MetricsReport]
    config: dict
    resolved: dict
    loss_summary: Optional[dict]
    artifacts: Dict[str, str]
    environment: dict
    timings_s: Dict[str, float]
    timings_min: Dict[str, float]
    reference_minutes: Optional[dict] = None

    def to_json(self) -> dict:
        return {
            "metrics": self.metrics.to_json() if self.metrics is not None else None,
            "config": self.config,
            "resolved": self.resolved,
            "loss_summary": self.loss_summary,
            "artifacts": self.artifacts,
            "environment": self.environment,
            "timings_s": self.timings_s,
            "timings_min": self.timings_min,
            "reference_minutes": self.reference_minutes,
        }


def load_dataset(cfg: PipelineConfig, data_dir: Optional[str] = None) -> Tuple[Dataset, Optional[DatasetEntry]]:
    """Read and preprocess the configured dataset."""
    data = cfg.dataset
    entry = None
    if data.name is not None:
        if data_dir is None:
            data_dir = read_directories_from_root(check_root_path()).data_dir
        ds, entry = load_named(data.name, data_dir)
        spec = PreprocessSpec(data.preprocess) if data.preprocess else entry.preprocess
    else:
        if data.path.endswith(".gz") or "idx" in os.path.basename(data.path):
            ds = load_idx(data.path, data.labels_path, name=data.label)
        else:
            ds = load_csv(data.path, data.label_column, name=data.label)
        spec = PreprocessSpec(data.preprocess or "none")
    if data.c_hint is not None and ds.labels is None:
        ds = ds._replace(c_hint=data.c_hint)
    ds = preprocess(ds, spec)
    if ds.n_clusters is None:
        log.error(f"{ds.name}: no labels and no c_hint, the cluster count is unknown")
        raise ConfigError(f"{ds.name}: cluster count unresolvable, give labels or c_hint")
    log.info(f"Dataset {ds.name}: n={ds.n}, d={ds.d}, c={ds.n_clusters}, preprocess={spec.mode}")
    return ds, entry


def run_directory(cfg: PipelineConfig) -> str:
    if cfg.out is not None:
        return cfg.out
    runs_dir = read_directories_from_root(check_root_path()).runs_dir
    source = "ae" if cfg.ae is not None else "raw"
    name = f"{cfg.dataset.label}-{source}-{cfg.manifold}-{cfg.clusterer.kind}-s{cfg.seed}"
    return os.path.join(runs_dir, name)


@contextmanager
def guarded_stage(name: str, timer: Optional[StageTimer] = None):
    """Time a stage and wrap unexpected failures in a StageError naming it."""
    timer = timer or StageTimer()
    try:
        with timer.stage(name):
            yield
    except (ConfigError, StageError):
        raise
    except Exception as e:
        log.error(f"Stage {name} failed: {e}")
        raise StageError(name, e) from e


class Pipeline:
    """One configured run. Each stage can also be called on its own."""

    def __init__(self, cfg: PipelineConfig, data_dir: Optional[str] = None):
        cfg.validate()
        self.cfg = cfg
        self.data_dir = data_dir
        self.runtime = apply_runtime(cfg.runtime)
        self.n_jobs = 1 if cfg.runtime.deterministic else max(1, cfg.runtime.threads)
        self.timer = StageTimer()
        self.artifacts: Dict[str, str] = {}
        self.ae_model = None
        self.loss_history: Optional[np.ndarray] = None

    def stage(self, name: str):
        return guarded_stage(name, self.timer)

    def load(self) -> Tuple[Dataset, Optional[DatasetEntry]]:
        with self.stage("load"):
            return load_dataset(self.cfg, self.data_dir)

    def autoencoder_config(self, ds: Dataset) -> AeConfig:
        settings = self.cfg.ae
        config = AeConfig(
            input_dim=ds.d,
            bottleneck_dim=settings.bottleneck_dim or ds.n_clusters,
            hidden_dims=tuple(settings.hidden_dims),
            epochs=settings.epochs,
            batch_size=settings.batch_size,
            learning_rate=settings.learning_rate,
            seed=self.cfg.seed,
            precision=self.runtime.precision,
        )
        config.validate()
        return config

    def embed(self, ds: Dataset) -> Embedding:
        """Autoencoded embedding, or the raw features when the autoencoder is skipped."""
        if self.cfg.ae is None:
            return from_dataset(ds.features)
        with self.stage("ae"):
            config = self.autoencoder_config(ds)
            model, history = train(init(config), ds)
            self.ae_model, self.loss_history = model, history
            return encode(model, ds)

    def loss_summary(self, ds: Dataset) -> Optional[dict]:
        if self.loss_history is None:
            return None
        history = self.loss_history
        return {
            "epochs": int(history.shape[0]),
            "first": float(history[0]),
            "final": float(history[-1]),
            "min": float(history.min()),
            "reconstruction_mse": reconstruction_mse(self.ae_model, ds),
        }

    def manifold_params(self, kind: str) -> dict:
        params = dict(self.cfg.manifold_params or {}) if kind == self.cfg.manifold else {}
        params.setdefault("seed", self.cfg.seed)
        if kind == "umap" and self.n_jobs > 1:
            params.setdefault("parallel", True)
        return params

    def reembed(
        self, emb: Embedding, c: int, kind: Optional[str] = None, n_components: Optional[int] = None
    ) -> Embedding:
        kind = kind or self.cfg.manifold
        with self.stage("manifold"):
            return manifold_fit(
                emb, kind, self.manifold_params(kind), n_components=n_components or c, n_jobs=self.n_jobs
            )

    def cluster(self, emb: Embedding, c: int) -> Tuple[Optional[GmmModel], ClusterAssignment]:
        with self.stage("cluster"):
            return cluster_fit(emb, c, self.cfg.clusterer._replace(n_jobs=self.n_jobs), seed=self.cfg.seed)

    def environment(self) -> dict:
        return {
            "threads": self.runtime.threads,
            "deterministic": self.runtime.deterministic,
            "precision": self.runtime.precision,
            "numpy": np.__version__,
            "torch": torch.__version__,
        }

    def run(self) -> RunReport:
        cfg = self.cfg
        run_dir = run_directory(cfg)
        os.makedirs(run_dir, exist_ok=True)
        log.info(f"Run directory: {run_dir}")

        with self.timer.stage("total"):
            ds, entry = self.load()
            c = ds.n_clusters
            ae_emb = self.embed(ds)
            if self.ae_model is not None:
                with self.stage("export"):
                    self.artifacts["checkpoint"] = save_checkpoint(
                        self.ae_model, os.path.join(run_dir, "autoencoder.npz"), self.loss_history
                    )
            emb = self.reembed(ae_emb, c)
            model, assignment = self.cluster(emb, c)

        with self.stage("export"):
            self.artifacts["embedding_csv"] = export_csv(emb, os.path.join(run_dir, "embedding.csv"), ds.labels)
            self.artifacts["embedding"] = save_embedding(emb, os.path.join(run_dir, "embedding.npz"))
            self.artifacts["assignment"] = export_assignment(assignment, os.path.join(run_dir, "assignment.csv"))
            if model is not None:
                self.artifacts["model"] = save_gmm(model, os.path.join(run_dir, "gmm.npz"))
            if cfg.visualize:
                self.visualize(ae_emb, emb, ds, run_dir)

        seconds = self.timer.seconds()
        timings = {stage: seconds.get(stage, 0.0) for stage in STAGES}
        metrics = None
        if ds.labels is not None:
            with self.stage("evaluate"):
                metrics = evaluate(ds.labels, assignment.labels, timings)
            log.info(f"{ds.name}: ACC {metrics.acc:.4f}, NMI {metrics.nmi:.4f}")
            table_path = os.path.join(run_dir, "table.csv")
            pd.DataFrame(
                [{"configuration": configuration_label(cfg), "acc": metrics.acc, "nmi": metrics.nmi}]
            ).to_csv(table_path, index=False)
            self.artifacts["table"] = table_path

        report_path = os.path.join(run_dir, "report.json")
        self.artifacts["report"] = report_path
        report = RunReport(
            metrics=metrics,
            config=config_to_dict(cfg),
            resolved={
                "n": ds.n,
                "d": ds.d,
                "n_clusters": c,
                "preprocess": cfg.dataset.preprocess or (entry.preprocess.mode if entry is not None else "none"),
                "autoencoder": self.autoencoder_config(ds)._asdict() if cfg.ae is not None else None,
                "embedding_dim": emb.m,
                "provenance": emb.provenance,
                "manifold_meta": _jsonable(emb.meta),
                "cluster_meta": _jsonable({k: v for k, v in assignment.meta.items() if k != "centers"}),
            },
            loss_summary=self.loss_summary(ds),
            artifacts=dict(self.artifacts),
            environment=self.environment(),
            timings_s=timings,
            timings_min={stage: value / 60.0 for stage, value in timings.items()},
            reference_minutes=_reference(entry, timings),
        )
        save_report(report, report_path)
        return report

    def visualize(self, source: Embedding, emb: Embedding, ds: Dataset, run_dir: str) -> None:
        """Scatter of a 2-D embedding; re-embeds the stage input in two dimensions if needed."""
        if emb.m != 2:
            kind = self.cfg.manifold if self.cfg.manifold != "none" else "umap"
            params = {**self.manifold_params(kind), "n_components": 2}
            emb = manifold_fit(source, kind, params, n_jobs=self.n_jobs)
        paths = export_visualization(emb, ds.labels, run_dir, seed=self.cfg.seed)
        self.artifacts.update({f"scatter_{k}": v for k, v in paths.items()})


def configuration_label(cfg: PipelineConfig) -> str:
    parts = []
    if cfg.ae is not None:
        parts.append("AE")
    if cfg.manifold != "none":
        parts.append({"umap": "UMAP", "tsne": "t-SNE", "isomap": "Isomap"}.get(cfg.manifold, cfg.manifold))
    return "+".join(parts) + f" ({cfg.clusterer.kind})" if parts else cfg.clusterer.kind.upper()


def _reference(entry: Optional[DatasetEntry], timings: Dict[str, float]) -> Optional[dict]:
    if entry is None or entry.reference_minutes is None:
        return None
    return {
        "gpu_minutes": entry.reference_minutes._asdict(),
        "measured_minutes": {
            "ae": timings["ae"] / 60.0,
            "manifold": timings["manifold"] / 60.0,
            "total": timings["total"] / 60.0,
        },
    }


def _jsonable(value):
    return json.loads(json.dumps(value, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))


def save_report(report: RunReport, path: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_json(), f, indent=2)
    return path


def run_pipeline(cfg: PipelineConfig, data_dir: Optional[str] = None) -> RunReport:
    """C = cluster(manifold(autoencode(X))) with per-stage timing and exported artifacts."""
    return Pipeline(cfg, data_dir).run()
