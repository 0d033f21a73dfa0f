import logging
from typing import NamedTuple, Optional

from ...embedding import Embedding
from ...exceptions import EmbclustError

log = logging.getLogger(__name__)


class MemoryGuardExceeded(EmbclustError):
    def __init__(self, learner: str, n: int, limit: int):
        super().__init__(f"{learner} refuses n={n} samples (memory guard {limit})")
        self.learner = learner
        self.n = n
        self.limit = limit


class ManifoldLearner(object):
    """Base class from which each manifold learner inherits"""

    name = ""
    config_type = NamedTuple

    def __init__(self, config: Optional[NamedTuple] = None, **params):
        if config is None:
            config = self.config_type(**params)
        elif params:
            config = config._replace(**params)
        self.config = config

    def __repr__(self):
        return "{}({})".format(self.name, self.config)

    def validate(self, n: int) -> None:
        """Check the configuration against a dataset of n samples"""
        raise (NotImplementedError)

    def guard(self, n: int, limit: Optional[int]) -> None:
        if limit is not None and n > limit:
            log.warning(f"{self.name}: n={n} exceeds the memory guard of {limit} samples")
            raise MemoryGuardExceeded(self.name, n, limit)

    def fit(self, emb: Embedding, n_jobs: int = 1) -> Embedding:
        """Re-embed the input coordinates"""
        raise (NotImplementedError)
