"""
container.py: versioned .npz container shared by checkpoints, embeddings and mixture models.
"""
import json
import logging
import pathlib
from typing import Dict, Tuple, Union

import numpy as np

from .exceptions import ConfigError

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


class ContainerError(ConfigError):
    pass


def save_container(
    path: Union[str, pathlib.Path], kind: str, meta: dict, arrays: Dict[str, np.ndarray]
) -> str:
    """Write arrays plus JSON metadata. Returns the written path."""
    path = str(path)
    if not path.endswith(".npz"):
        path += ".npz"
    header = {"format_version": FORMAT_VERSION, "kind": kind, "meta": meta}
    np.savez(
        path,
        __header__=np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8),
        **arrays,
    )
    return path


def load_container(
    path: Union[str, pathlib.Path], kind: str
) -> Tuple[dict, Dict[str, np.ndarray]]:
    """Read a container written by save_container, checking version and kind."""
    with np.load(str(path), allow_pickle=False) as npz:
        if "__header__" not in npz.files:
            log.error(f"{path} is not an embclust container")
            raise ContainerError(f"{path}: missing header")
        header = json.loads(npz["__header__"].tobytes().decode("utf-8"))
        arrays = {name: npz[name] for name in npz.files if name != "__header__"}
    if header.get("format_version") != FORMAT_VERSION:
        log.error(f"Unsupported container version in {path}")
        raise ContainerError(
            f"{path}: format_version {header.get('format_version')} != {FORMAT_VERSION}"
        )
    if header.get("kind") != kind:
        raise ContainerError(f"{path}: expected a '{kind}' container, found '{header.get('kind')}'")
    return header["meta"], arrays
