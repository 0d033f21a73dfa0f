from importlib import import_module
from inspect import getmembers, isclass
from pathlib import Path
from pkgutil import iter_modules
from typing import Dict, Type

from .base_learner import ManifoldLearner, MemoryGuardExceeded  # noqa


def _is_learner(candidate) -> bool:
    return isclass(candidate) and issubclass(candidate, ManifoldLearner) and candidate is not ManifoldLearner


def discover() -> Dict[str, Type[ManifoldLearner]]:
    """Learner classes of every module in this package, keyed by their `name`."""
    found = {}
    for _, module_name, _ in iter_modules([str(Path(__file__).resolve().parent)]):
        module = import_module(f"{__name__}.{module_name}")
        for _, learner in getmembers(module, _is_learner):
            found[learner.name] = learner
    return found


learners = discover()
