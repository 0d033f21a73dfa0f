import logging
from typing import NamedTuple, Optional, Union

from ..embedding import Embedding
from ..exceptions import ConfigError
from .learners import ManifoldLearner, MemoryGuardExceeded, learners  # noqa
from .learners.isomap import IsomapConfig, IsomapLearner, isomap_fit  # noqa
from .learners.tsne import TsneConfig, TsneLearner, tsne_fit  # noqa
from .learners.umap import UmapConfig, UmapLearner, fit_ab, umap_fit  # noqa
from .neighbors import NeighborGraph, knn_graph  # noqa

log = logging.getLogger(__name__)

NONE = "none"
MANIFOLD_KINDS = tuple(sorted(learners)) + (NONE,)


def make_learner(
    kind: str, params: Union[None, dict, NamedTuple] = None, n_components: Optional[int] = None
) -> ManifoldLearner:
    """Instantiate the registered learner `kind` from a config or a dict of overrides."""
    if kind not in learners:
        log.error(f"Unknown manifold learner {kind}, choose from {MANIFOLD_KINDS}")
        raise ConfigError(f"unknown manifold learner '{kind}'")
    learner_class = learners[kind]
    if params is None:
        params = {}
    if isinstance(params, dict):
        unknown = set(params) - set(learner_class.config_type._fields)
        if unknown:
            raise ConfigError(f"unknown {kind} parameters: {sorted(unknown)}")
        config = learner_class.config_type(**params)
    else:
        config = params
    if config.n_components is None and n_components is not None:
        config = config._replace(n_components=n_components)
    return learner_class(config)


def manifold_fit(
    emb: Embedding,
    kind: str,
    params: Union[None, dict, NamedTuple] = None,
    n_components: Optional[int] = None,
    n_jobs: int = 1,
) -> Embedding:
    """Re-embed `emb` with the learner `kind`; `none` returns the input unchanged."""
    if kind == NONE:
        return emb
    learner = make_learner(kind, params, n_components)
    log.debug(f"Manifold stage: {learner}")
    return learner.fit(emb, n_jobs=n_jobs)
