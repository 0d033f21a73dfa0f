import logging
import os
import traceback
from typing import NamedTuple, Optional

import numba
import torch

from .exceptions import ConfigError

log = logging.getLogger(__name__)


class Directories(NamedTuple):
    data_dir: str
    runs_dir: str


class WrongEnvironmentVariable(ConfigError):
    pass


class WrongLayout(ConfigError):
    pass


class Runtime(NamedTuple):
    """Execution mode shared by every stage of a run."""

    deterministic: bool = False
    threads: int = 0
    precision: str = "float64"


def read_directories_from_root(root: str) -> Directories:
    """Define data directory and runs directory having root path as reference"""
    return Directories(os.path.join(root, "data"), os.path.join(root, "runs"))


def check_layout_exist(root: str) -> None:
    project_dirs = read_directories_from_root(root)
    for dir in project_dirs:
        if not os.path.isdir(dir):
            log.error(
                "Wrong data/runs structure. Please use the layout command to configure the project."
            )
            raise WrongLayout(f"missing directory {dir}")


def check_root_path() -> str:
    """Check if EMBCLUST_ROOT environment variable was set up correctly"""
    root_dir = os.environ.get("EMBCLUST_ROOT")
    if not root_dir:
        log.error("Please, set up environment variable EMBCLUST_ROOT.")
        raise WrongEnvironmentVariable("EMBCLUST_ROOT is not set")

    if not os.path.isdir(root_dir):
        log.error("environment variable EMBCLUST_ROOT is pointing to a non existing path.")
        raise WrongEnvironmentVariable(f"EMBCLUST_ROOT={root_dir} does not exist")

    return root_dir


def configure_layout(root_dir: Optional[str] = None) -> Directories:
    """Create project layout."""
    if not root_dir:
        root_dir = os.path.dirname(os.path.abspath(traceback.extract_stack()[-2].filename))
        os.environ["EMBCLUST_ROOT"] = root_dir
    project_dirs = read_directories_from_root(root_dir)
    for dir in project_dirs:
        if os.path.isdir(dir):
            continue
        os.makedirs(dir)
        log.info(f"Directory created: {dir}")
    return project_dirs


def apply_runtime(runtime: Runtime) -> Runtime:
    """Configure torch and numba for the requested execution mode."""
    threads = runtime.threads
    if runtime.deterministic:
        threads = 1
    if threads > 0:
        torch.set_num_threads(threads)
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    torch.use_deterministic_algorithms(runtime.deterministic)
    if runtime.precision not in ("float64", "float32"):
        log.error(f"Unknown precision mode: {runtime.precision}")
        raise ConfigError(f"precision must be float64 or float32, got {runtime.precision}")
    effective = runtime._replace(threads=torch.get_num_threads())
    log.debug(f"Runtime: {effective}")
    return effective
