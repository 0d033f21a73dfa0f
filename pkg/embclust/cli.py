import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from .autoencoder import encode, init, load_checkpoint, save_checkpoint, train
from .clustering import ClusterConfig, cluster_fit, export_assignment, import_assignment, save_gmm
from .embedding import RAW, export_csv, import_csv, load_embedding, save_embedding
from .evaluation import evaluate
from .exceptions import ConfigError, StageError
from .log import setup_logging
from .manifold import MANIFOLD_KINDS, manifold_fit
from .pipeline import (Pipeline, config_from_dict, export_visualization, load_config,
                       run_ablation, run_baselines, run_pipeline)
from .pipeline.config import SKIP, PipelineConfig, config_to_dict
from .pipeline.runner import guarded_stage, run_directory
from .settings import Runtime, apply_runtime, check_root_path, configure_layout

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3

DATASET_ACTIONS = ("run", "train-ae", "embed", "ablation", "baselines", "viz")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="embclust CLI")
    action_parser = parser.add_subparsers(dest="command", title="actions")
    action_parser.required = True
    action_parser.add_parser("run", help="Run the full pipeline: autoencoder, manifold, clustering, evaluation.")
    action_parser.add_parser("train-ae", help="Train the autoencoder and save a checkpoint.")
    action_parser.add_parser("embed", help="Encode a dataset with a trained autoencoder checkpoint.")
    action_parser.add_parser("manifold", help="Re-embed an embedding file with a manifold learner.")
    action_parser.add_parser("cluster", help="Cluster an embedding file.")
    action_parser.add_parser("eval", help="Score an assignment file against ground-truth labels.")
    action_parser.add_parser("ablation", help="Run the component ablation grid over several seeds.")
    action_parser.add_parser("baselines", help="Run k-means and GMM on the raw data over several seeds.")
    action_parser.add_parser("viz", help="Run the pipeline and export a 2-D scatter plot.")
    action_parser.add_parser("layout", help="Build the directory layout with data and runs directories.")

    for action, subparser in action_parser.choices.items():
        subparser.add_argument(
            "-v", "--verbose", action="store_true", help="show additional debugging info"
        )
        if action == "layout":
            continue
        subparser.add_argument("--out", type=str, help="output directory of the action")
        subparser.add_argument("--seed", type=int, help="random seed")
        subparser.add_argument(
            "--deterministic", action="store_true", default=None,
            help="single-threaded, bitwise reproducible execution",
        )
        if action in DATASET_ACTIONS:
            subparser.add_argument("--config", type=str, help="JSON or TOML configuration file")
            subparser.add_argument("--dataset", type=str, help="registered dataset name or CSV/IDX path")
            subparser.add_argument("--labels", type=str, help="IDX labels file for an IDX dataset path")
            subparser.add_argument("--label-column", type=str, help="label column of a CSV dataset")
            subparser.add_argument("--n-clusters", type=int, help="cluster count for unlabelled data")
            subparser.add_argument("--epochs", type=int, help="autoencoder epochs")
            subparser.add_argument("--skip-ae", action="store_true", default=None, help="cluster raw data")
        if action in DATASET_ACTIONS + ("manifold",):
            subparser.add_argument("--manifold", choices=MANIFOLD_KINDS, help="manifold learner")
            subparser.add_argument("--n-neighbors", type=int, help="UMAP/Isomap neighbourhood size")
            subparser.add_argument("--min-dist", type=float, help="UMAP minimum distance")
            subparser.add_argument("--perplexity", type=float, help="t-SNE perplexity")
            subparser.add_argument("--n-components", type=int, help="manifold dimensionality")
        if action in DATASET_ACTIONS + ("cluster",):
            subparser.add_argument("--clusterer", choices=("gmm", "kmeans"), help="shallow clusterer")
            subparser.add_argument("--n-init", type=int, help="clusterer restarts")
        if action in ("ablation", "baselines"):
            subparser.add_argument(
                "--seeds", type=int, nargs="+", default=[0, 1, 2], help="seeds of the grid"
            )
        if action == "embed":
            subparser.add_argument("--checkpoint", required=True, type=str, help="autoencoder checkpoint")
        if action in ("manifold", "cluster"):
            subparser.add_argument(
                "--embedding", required=True, type=str, help="embedding file (.npz container or .csv)"
            )
        if action == "cluster":
            subparser.add_argument("--n-clusters", type=int, help="cluster count, else from the label column")
        if action == "eval":
            subparser.add_argument("--assignment", required=True, type=str, help="assignment CSV")
            subparser.add_argument(
                "--truth", required=True, type=str, help="embedding CSV holding the true label column"
            )
    return parser


def parse_args(argv: Optional[List[str]] = None):
    """Parse command-line arguments"""
    parser = build_parser()
    input = parser.parse_args(argv)
    sys.exit(main(vars(input)))


def main(cmd_args: dict) -> int:
    setup_logging(logging.DEBUG if cmd_args.pop("verbose", False) else logging.INFO)
    try:
        parser_selection(cmd_args)
    except ConfigError as e:
        log.error(e.message)
        return EXIT_CONFIG
    except StageError as e:
        log.error(e.message)
        return EXIT_STAGE
    return EXIT_OK


def _overrides(cmd_args: dict) -> PipelineConfig:
    """Configuration file (if any) with the command-line flags applied on top."""
    raw = {}
    if cmd_args.get("config"):
        raw = config_to_dict(load_config(cmd_args["config"]))
    if cmd_args.get("dataset"):
        dataset = cmd_args["dataset"]
        raw["dataset"] = {"path": dataset} if os.path.isfile(dataset) else {"name": dataset}
    dataset = dict(raw.get("dataset", {}))
    for flag, key in (("labels", "labels_path"), ("label_column", "label_column"), ("n_clusters", "c_hint")):
        if cmd_args.get(flag) is not None:
            dataset[key] = cmd_args[flag]
    raw["dataset"] = dataset

    if cmd_args.get("skip_ae"):
        raw["ae"] = SKIP
    elif cmd_args.get("epochs") is not None:
        ae = raw.get("ae", {})
        raw["ae"] = {**(ae if isinstance(ae, dict) else {}), "epochs": cmd_args["epochs"]}

    manifold = raw.get("manifold", {"kind": "umap"})
    if isinstance(manifold, str):
        manifold = {"kind": manifold}
    if cmd_args.get("manifold") and cmd_args["manifold"] != manifold.get("kind"):
        manifold = {"kind": cmd_args["manifold"]}
    for flag in ("n_neighbors", "min_dist", "perplexity", "n_components"):
        if cmd_args.get(flag) is not None:
            manifold[flag] = cmd_args[flag]
    raw["manifold"] = manifold

    clusterer = raw.get("clusterer", {"kind": "gmm"})
    if isinstance(clusterer, str):
        clusterer = {"kind": clusterer}
    if cmd_args.get("clusterer"):
        clusterer["kind"] = cmd_args["clusterer"]
    if cmd_args.get("n_init") is not None:
        clusterer["n_init"] = cmd_args["n_init"]
    raw["clusterer"] = clusterer

    for flag in ("seed", "deterministic", "out"):
        if cmd_args.get(flag) is not None:
            raw[flag] = cmd_args[flag]
    return config_from_dict(raw)


def _read_embedding(path: str):
    if path.endswith(".csv"):
        return import_csv(path, RAW)
    return load_embedding(path), None


def parser_selection(cmd_args: dict) -> None:
    command = cmd_args.pop("command")

    if command == "layout":
        configure_layout(check_root_path())
        return
    if command in ("run", "viz"):
        cfg = _overrides(cmd_args)
        if command == "viz":
            cfg = cfg._replace(visualize=True)
        report = run_pipeline(cfg)
        if report.metrics is not None:
            log.info(json.dumps(report.metrics.to_json()))
        return
    if command == "ablation":
        run_ablation(_overrides(cmd_args), cmd_args["seeds"])
        return
    if command == "baselines":
        run_baselines(_overrides(cmd_args), cmd_args["seeds"])
        return
    if command in ("train-ae", "embed"):
        cfg = _overrides(cmd_args)
        if cfg.ae is None:
            raise ConfigError(f"{command} needs the autoencoder enabled")
        pipeline = Pipeline(cfg)
        ds, _ = pipeline.load()
        out = run_directory(cfg)
        os.makedirs(out, exist_ok=True)
        if command == "train-ae":
            with pipeline.stage("ae"):
                model, history = train(init(pipeline.autoencoder_config(ds)), ds)
                path = save_checkpoint(model, os.path.join(out, "autoencoder.npz"), history)
            log.info(f"Checkpoint written to {path}, final loss {history[-1]:.6f}")
        else:
            with pipeline.stage("ae"):
                model, _ = load_checkpoint(cmd_args["checkpoint"])
                emb = encode(model, ds)
            save_embedding(emb, os.path.join(out, "embedding.npz"))
            export_csv(emb, os.path.join(out, "embedding.csv"), ds.labels)
            log.info(f"Embedding of {emb.n}x{emb.m} written to {out}")
        return

    out = cmd_args.get("out") or "."
    os.makedirs(out, exist_ok=True)
    seed = cmd_args.get("seed") or 0
    runtime = apply_runtime(Runtime(deterministic=bool(cmd_args.get("deterministic"))))
    n_jobs = 1 if runtime.deterministic else max(1, runtime.threads)
    if command == "manifold":
        emb, labels = _read_embedding(cmd_args["embedding"])
        params = {
            k: cmd_args[k] for k in ("n_neighbors", "min_dist", "perplexity")
            if cmd_args.get(k) is not None
        }
        kind = cmd_args.get("manifold") or "umap"
        if kind == "tsne":
            params.pop("n_neighbors", None)
        if kind != "umap":
            params.pop("min_dist", None)
        if kind != "tsne":
            params.pop("perplexity", None)
        if kind != "none":
            params["seed"] = seed
        n_components = cmd_args.get("n_components")
        if n_components is None and kind != "none":
            if labels is None:
                raise ConfigError("--n-components is required when the embedding carries no labels")
            n_components = int(len(set(labels.tolist())))
        with guarded_stage("manifold"):
            result = manifold_fit(emb, kind, params, n_components=n_components, n_jobs=n_jobs)
        save_embedding(result, os.path.join(out, "manifold.npz"))
        export_csv(result, os.path.join(out, "manifold.csv"), labels)
        if result.m == 2:
            export_visualization(result, labels, out, seed=seed)
    elif command == "cluster":
        emb, labels = _read_embedding(cmd_args["embedding"])
        c = cmd_args.get("n_clusters")
        if c is None:
            if labels is None:
                raise ConfigError("--n-clusters is required when the embedding carries no labels")
            c = int(len(set(labels.tolist())))
        cfg = ClusterConfig(cmd_args.get("clusterer") or "gmm", cmd_args.get("n_init") or 10, n_jobs)
        with guarded_stage("cluster"):
            model, assignment = cluster_fit(emb, c, cfg, seed=seed)
        export_assignment(assignment, os.path.join(out, "assignment.csv"))
        if model is not None:
            save_gmm(model, os.path.join(out, "gmm.npz"))
    elif command == "eval":
        assignment = import_assignment(cmd_args["assignment"])
        _, labels = import_csv(cmd_args["truth"], RAW)
        if labels is None:
            raise ConfigError(f"{cmd_args['truth']} has no label column")
        metrics = evaluate(labels, assignment.labels)
        path = os.path.join(out, "metrics.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(metrics.to_json(), f, indent=2)
        log.info(json.dumps(metrics.to_json()))
