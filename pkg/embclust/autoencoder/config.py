import logging
from typing import NamedTuple, Tuple

from ..exceptions import ConfigError

log = logging.getLogger(__name__)


class AeConfig(NamedTuple):
    """Fully connected autoencoder d-500-500-2000-c with a mirrored decoder."""

    input_dim: int
    bottleneck_dim: int
    hidden_dims: Tuple[int, ...] = (500, 500, 2000)
    epochs: int = 1000
    batch_size: int = 256
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    precision: str = "float64"

    def validate(self) -> None:
        dims = (self.input_dim, self.bottleneck_dim) + tuple(self.hidden_dims)
        problems = []
        if any(int(dim) < 1 for dim in dims):
            problems.append(f"all layer widths must be >= 1, got {dims}")
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            problems.append(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            problems.append(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.precision not in ("float64", "float32"):
            problems.append(f"precision must be float64 or float32, got {self.precision}")
        if problems:
            log.error("Invalid autoencoder configuration: " + "; ".join(problems))
            raise ConfigError("; ".join(problems))

    def encoder_dims(self) -> Tuple[int, ...]:
        return (self.input_dim,) + tuple(self.hidden_dims) + (self.bottleneck_dim,)
