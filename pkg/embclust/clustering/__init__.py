import logging
from typing import NamedTuple, Optional, Tuple

from ..embedding import Embedding
from ..exceptions import ConfigError
from .assignment import (AssignmentError, ClusterAssignment,  # noqa
                         export_assignment, import_assignment, make_assignment)
from .gmm import GmmModel, SingularCovariance, gmm_fit, load_gmm, predict, save_gmm  # noqa
from .kmeans import KmeansRun, TooManyClusters, kmeans_fit  # noqa

log = logging.getLogger(__name__)

CLUSTERERS = ("gmm", "kmeans")


class ClusterConfig(NamedTuple):
    kind: str = "gmm"
    n_init: int = 10
    n_jobs: int = 1

    def validate(self) -> None:
        if self.kind not in CLUSTERERS:
            log.error(f"Unknown clusterer {self.kind}")
            raise ConfigError(f"clusterer must be one of {CLUSTERERS}, got '{self.kind}'")
        if self.n_init < 1:
            raise ConfigError(f"n_init must be >= 1, got {self.n_init}")


def cluster_fit(
    emb: Embedding, c: int, cfg: ClusterConfig, seed: int = 0
) -> Tuple[Optional[GmmModel], ClusterAssignment]:
    """Run the configured clusterer. The model is None for k-means."""
    cfg.validate()
    if cfg.kind == "kmeans":
        return None, kmeans_fit(emb, c, cfg.n_init, seed, cfg.n_jobs)
    return gmm_fit(emb, c, cfg.n_init, seed, cfg.n_jobs)
