import json
import os

import pandas as pd
import pytest

from embclust import cli
from embclust.embedding import export_csv, make_embedding

from .synthetic import make_blobs


def _arguments(argv):
    return vars(cli.build_parser().parse_args(argv))


@pytest.fixture
def labelled_embedding(tmp_path):
    x, y = make_blobs(20, [[0.0, 0.0], [10.0, 10.0]], seed=4)
    return export_csv(make_embedding(x), tmp_path / "embedding.csv", y)


@pytest.fixture
def blobs_csv(tmp_path):
    x, y = make_blobs(20, [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]], seed=5)
    frame = pd.DataFrame(x, columns=["a", "b", "c"])
    frame["label"] = y
    path = tmp_path / "blobs.csv"
    frame.to_csv(path, index=False)
    return str(path)


def test_run_exits_ok(blobs_csv, tmp_path):
    out = tmp_path / "run"
    argv = ["run", "--dataset", blobs_csv, "--label-column", "label", "--skip-ae", "--manifold", "none",
            "--n-init", "2", "--out", str(out)]
    assert cli.main(_arguments(argv)) == cli.EXIT_OK
    with open(out / "report.json") as f:
        assert json.load(f)["metrics"]["acc"] == 1.0


def test_parse_args_exits_with_status(blobs_csv, tmp_path):
    argv = ["run", "--dataset", "no-such-benchmark", "--out", str(tmp_path)]
    with pytest.raises(SystemExit) as info:
        cli.parse_args(argv)
    assert info.value.code == cli.EXIT_CONFIG


def test_config_errors_exit_two(labelled_embedding, tmp_path):
    argv = ["cluster", "--embedding", labelled_embedding, "--n-clusters", "100", "--out", str(tmp_path)]
    assert cli.main(_arguments(argv)) == cli.EXIT_CONFIG
    argv = ["manifold", "--embedding", labelled_embedding, "--manifold", "tsne", "--perplexity", "80",
            "--out", str(tmp_path)]
    assert cli.main(_arguments(argv)) == cli.EXIT_CONFIG


def test_stage_failure_exits_three(labelled_embedding, tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("solver exploded")

    monkeypatch.setattr(cli, "cluster_fit", broken)
    argv = ["cluster", "--embedding", labelled_embedding, "--out", str(tmp_path)]
    assert cli.main(_arguments(argv)) == cli.EXIT_STAGE


def test_cluster_then_eval(labelled_embedding, tmp_path):
    out = str(tmp_path / "steps")
    argv = ["cluster", "--embedding", labelled_embedding, "--clusterer", "kmeans", "--n-init", "3", "--out", out]
    assert cli.main(_arguments(argv)) == cli.EXIT_OK
    assignment = os.path.join(out, "assignment.csv")
    assert not os.path.exists(os.path.join(out, "gmm.npz"))
    argv = ["eval", "--assignment", assignment, "--truth", labelled_embedding, "--out", out]
    assert cli.main(_arguments(argv)) == cli.EXIT_OK
    with open(os.path.join(out, "metrics.json")) as f:
        metrics = json.load(f)
    assert metrics["acc"] == 1.0
    assert metrics["nmi"] == pytest.approx(1.0)


def test_manifold_command_writes_scatter(labelled_embedding, tmp_path):
    out = tmp_path / "isomap"
    argv = ["manifold", "--embedding", labelled_embedding, "--manifold", "isomap", "--n-neighbors", "5",
            "--n-components", "2", "--deterministic", "--out", str(out)]
    assert cli.main(_arguments(argv)) == cli.EXIT_OK
    for name in ("manifold.npz", "manifold.csv", "scatter.svg", "scatter.png", "scatter.csv"):
        assert (out / name).is_file()


def test_layout(tmp_path, monkeypatch):
    monkeypatch.setenv("EMBCLUST_ROOT", str(tmp_path))
    assert cli.main(_arguments(["layout"])) == cli.EXIT_OK
    assert (tmp_path / "data").is_dir() and (tmp_path / "runs").is_dir()
    monkeypatch.delenv("EMBCLUST_ROOT")
    assert cli.main(_arguments(["layout"])) == cli.EXIT_CONFIG


def test_flags_override_config_file(blobs_csv, tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        f'dataset = {{ path = "{blobs_csv}", label_column = "label" }}\n'
        'manifold = { kind = "umap", n_neighbors = 5 }\n'
        'seed = 1\n'
    )
    cfg = cli._overrides(_arguments(["run", "--config", str(path), "--min-dist", "0.1", "--seed", "7",
                                     "--epochs", "2"]))
    assert cfg.manifold_params == {"n_neighbors": 5, "min_dist": 0.1}
    assert cfg.seed == 7
    assert cfg.ae.epochs == 2
    cfg = cli._overrides(_arguments(["run", "--config", str(path), "--manifold", "tsne"]))
    assert cfg.manifold == "tsne" and cfg.manifold_params is None
