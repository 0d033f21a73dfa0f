import logging

import numpy as np
import pytest
import torch
from numpy.testing import assert_array_equal

from embclust.container import ContainerError, load_container, save_container
from embclust.embedding import InvalidEmbedding, load_embedding, make_embedding, save_embedding
from embclust.exceptions import ConfigError
from embclust.log import setup_logging
from embclust.settings import (Runtime, WrongEnvironmentVariable, WrongLayout, apply_runtime, check_layout_exist,
                               check_root_path, configure_layout, read_directories_from_root)


def test_layout_is_created_once(tmp_path):
    dirs = configure_layout(str(tmp_path))
    assert dirs == read_directories_from_root(str(tmp_path))
    assert all(tmp_path.joinpath(name).is_dir() for name in ("data", "runs"))
    assert configure_layout(str(tmp_path)) == dirs
    check_layout_exist(str(tmp_path))


def test_missing_layout(tmp_path):
    with pytest.raises(WrongLayout):
        check_layout_exist(str(tmp_path))


def test_root_variable(tmp_path, monkeypatch):
    monkeypatch.delenv("EMBCLUST_ROOT", raising=False)
    with pytest.raises(WrongEnvironmentVariable):
        check_root_path()
    monkeypatch.setenv("EMBCLUST_ROOT", str(tmp_path / "absent"))
    with pytest.raises(WrongEnvironmentVariable):
        check_root_path()
    monkeypatch.setenv("EMBCLUST_ROOT", str(tmp_path))
    assert check_root_path() == str(tmp_path)


def test_setup_logging_is_idempotent():
    before = len(logging.root.handlers)
    setup_logging(logging.DEBUG)
    setup_logging(logging.INFO)
    assert len(logging.root.handlers) == before
    assert logging.root.level == logging.INFO


def test_deterministic_runtime_is_single_threaded():
    threads = torch.get_num_threads()
    try:
        runtime = apply_runtime(Runtime(deterministic=True, threads=4))
        assert runtime.threads == 1
        assert torch.are_deterministic_algorithms_enabled()
    finally:
        torch.use_deterministic_algorithms(False)
        torch.set_num_threads(threads)


def test_unknown_precision():
    with pytest.raises(ConfigError):
        apply_runtime(Runtime(precision="float16"))


def test_container_checks_kind(tmp_path):
    path = save_container(tmp_path / "thing", "gmm", {"answer": 42}, {"values": np.arange(3.0)})
    assert path.endswith(".npz")
    meta, arrays = load_container(path, "gmm")
    assert meta == {"answer": 42}
    assert_array_equal(arrays["values"], [0.0, 1.0, 2.0])
    with pytest.raises(ContainerError):
        load_container(path, "embedding")
    np.savez(tmp_path / "plain.npz", values=np.zeros(2))
    with pytest.raises(ContainerError):
        load_container(tmp_path / "plain.npz", "gmm")


def test_embedding_file_keeps_provenance(tmp_path):
    emb = make_embedding(np.random.default_rng(0).normal(size=(6, 2)), "manifold(umap)", {"a": 1.5})
    restored = load_embedding(save_embedding(emb, tmp_path / "emb"))
    assert_array_equal(restored.coords, emb.coords)
    assert restored.provenance == "manifold(umap)"
    assert restored.meta == {"a": 1.5}


def test_embedding_rejects_non_finite():
    with pytest.raises(InvalidEmbedding):
        make_embedding([[0.0, np.nan]])
