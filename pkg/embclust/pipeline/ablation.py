"""
ablation.py: the component ablation grid and the shallow baselines, over several seeds.
"""
import logging
import os
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from ..clustering import ClusterConfig
from ..embedding import from_dataset
from ..evaluation import accuracy, nmi
from ..exceptions import ConfigError, StageError
from ..manifold import MemoryGuardExceeded
from ..settings import check_root_path, read_directories_from_root
from .config import AeSettings, PipelineConfig
from .runner import Pipeline, load_dataset

log = logging.getLogger(__name__)

DASH = "-"
DEFAULT_SEEDS = (0, 1, 2)

# (row label, uses the autoencoder, manifold learner)
ABLATION_ROWS = (
    ("GMM", False, "none"),
    ("AE", True, "none"),
    ("Isomap", False, "isomap"),
    ("AE+Isomap", True, "isomap"),
    ("t-SNE", False, "tsne"),
    ("AE+t-SNE", True, "tsne"),
    ("UMAP", False, "umap"),
    ("AE+UMAP", True, "umap"),
)


class Cell(NamedTuple):
    configuration: str
    seed: int
    acc: Optional[float]
    nmi: Optional[float]
    note: str = ""


def _reason(error: StageError) -> str:
    if isinstance(error.cause, MemoryGuardExceeded):
        return f"memory guard: {error.cause}"
    return str(error)


def summarize(cells: List[Cell], order: Sequence[str]) -> pd.DataFrame:
    """Best-seed ACC (with that seed's NMI) and the means per configuration; dashes where nothing ran."""
    rows = []
    for configuration in order:
        mine = [cell for cell in cells if cell.configuration == configuration]
        done = [cell for cell in mine if cell.acc is not None]
        if not done:
            notes = sorted({cell.note for cell in mine if cell.note})
            rows.append(
                {
                    "configuration": configuration, "acc": DASH, "nmi": DASH, "acc_mean": DASH,
                    "nmi_mean": DASH, "best_seed": DASH, "seeds": 0, "note": "; ".join(notes),
                }
            )
            continue
        # highest ACC, earliest seed on ties
        best = max(done, key=lambda cell: (cell.acc, -cell.seed))
        failed = [cell for cell in mine if cell.acc is None]
        rows.append(
            {
                "configuration": configuration,
                "acc": round(best.acc, 4),
                "nmi": round(best.nmi, 4),
                "acc_mean": round(float(np.mean([c.acc for c in done])), 4),
                "nmi_mean": round(float(np.mean([c.nmi for c in done])), 4),
                "best_seed": best.seed,
                "seeds": len(done),
                "note": "; ".join(sorted({c.note for c in failed})),
            }
        )
    return pd.DataFrame(rows)


def _output_dir(cfg: PipelineConfig, prefix: str, ds_name: str) -> str:
    if cfg.out is not None:
        return cfg.out
    return os.path.join(read_directories_from_root(check_root_path()).runs_dir, f"{prefix}-{ds_name}")


def _write(table: pd.DataFrame, cells: List[Cell], out: str, name: str) -> None:
    os.makedirs(out, exist_ok=True)
    table.to_csv(os.path.join(out, f"{name}.csv"), index=False)
    pd.DataFrame(cells).to_csv(os.path.join(out, f"{name}_cells.csv"), index=False)
    log.info(f"{name} written to {out}\n{table.to_string(index=False)}")


def run_ablation(
    cfg: PipelineConfig, seeds: Sequence[int] = DEFAULT_SEEDS, data_dir: Optional[str] = None
) -> pd.DataFrame:
    """Every row of ABLATION_ROWS per seed, with the configured clusterer.

    The autoencoder is trained once per seed and shared by the rows that use it.
    A failing cell becomes a dash with its reason instead of aborting the grid.
    """
    ds, _ = load_dataset(cfg, data_dir)
    c = ds.n_clusters
    if ds.labels is None:
        log.error(f"{ds.name} has no labels to score against")
        raise ConfigError(f"{ds.name}: ablation needs labelled data")
    raw = from_dataset(ds.features)
    cells = []
    for seed in seeds:
        pipeline = Pipeline(cfg._replace(seed=seed, ae=cfg.ae or AeSettings()), data_dir)
        ae_emb, ae_error = None, None
        try:
            ae_emb = pipeline.embed(ds)
        except StageError as e:
            ae_error = e
            log.warning(f"Seed {seed}: autoencoder failed, AE rows get dashes: {e}")
        for label, uses_ae, kind in ABLATION_ROWS:
            if uses_ae and ae_emb is None:
                cells.append(Cell(label, seed, None, None, _reason(ae_error)))
                continue
            try:
                emb = pipeline.reembed(ae_emb if uses_ae else raw, c, kind)
                _, assignment = pipeline.cluster(emb, c)
            except StageError as e:
                log.warning(f"Seed {seed}, {label}: {_reason(e)}")
                cells.append(Cell(label, seed, None, None, _reason(e)))
                continue
            acc, _ = accuracy(ds.labels, assignment.labels)
            cells.append(Cell(label, seed, float(acc), nmi(ds.labels, assignment.labels)))
            log.info(f"Seed {seed}, {label}: ACC {acc:.4f}")
    table = summarize(cells, [row[0] for row in ABLATION_ROWS])
    _write(table, cells, _output_dir(cfg, "ablation", ds.name), "table")
    return table


def run_baselines(
    cfg: PipelineConfig, seeds: Sequence[int] = DEFAULT_SEEDS, data_dir: Optional[str] = None
) -> pd.DataFrame:
    """k-means and GMM on the preprocessed raw features."""
    ds, _ = load_dataset(cfg, data_dir)
    c = ds.n_clusters
    if ds.labels is None:
        log.error(f"{ds.name} has no labels to score against")
        raise ConfigError(f"{ds.name}: ablation needs labelled data")
    raw = from_dataset(ds.features)
    cells = []
    for seed in seeds:
        for label, kind in (("k-means", "kmeans"), ("GMM", "gmm")):
            clusterer = ClusterConfig(kind, cfg.clusterer.n_init, cfg.clusterer.n_jobs)
            pipeline = Pipeline(cfg._replace(seed=seed, ae=None, manifold="none", clusterer=clusterer), data_dir)
            try:
                _, assignment = pipeline.cluster(raw, c)
            except StageError as e:
                cells.append(Cell(label, seed, None, None, _reason(e)))
                continue
            acc, _ = accuracy(ds.labels, assignment.labels)
            cells.append(Cell(label, seed, float(acc), nmi(ds.labels, assignment.labels)))
    table = summarize(cells, ["k-means", "GMM"])
    _write(table, cells, _output_dir(cfg, "baselines", ds.name), "baselines")
    return table
