"""
model.py: the autoencoder network and its optimizer state.
"""
import logging
from typing import Tuple

import numpy as np
import torch
from torch import nn

from ..exceptions import ConfigError
from .config import AeConfig

log = logging.getLogger(__name__)

DTYPES = {"float64": torch.float64, "float32": torch.float32}


class DimensionMismatch(ConfigError):
    pass


def _stack(dims: Tuple[int, ...]) -> nn.Sequential:
    """Linear layers with ReLU between them; the last layer stays linear."""
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        layers.append(nn.Linear(fan_in, fan_out))
        if i < len(dims) - 2:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class Autoencoder(nn.Module):
    """Encoder f: d -> c and decoder g: c -> d, the decoder mirroring the encoder."""

    def __init__(self, config: AeConfig):
        super().__init__()
        dims = config.encoder_dims()
        self.encoder = _stack(dims)
        self.decoder = _stack(tuple(reversed(dims)))

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        h = self.encoder(x)
        return h, self.decoder(h)

    def linear_layers(self):
        return [m for m in self.modules() if isinstance(m, nn.Linear)]


class AeModel:
    """Network plus Adam moment accumulators, trained by a single writer."""

    def __init__(self, config: AeConfig, network: Autoencoder, optimizer: torch.optim.Adam):
        self.config = config
        self.network = network
        self.optimizer = optimizer

    @property
    def dtype(self) -> torch.dtype:
        return DTYPES[self.config.precision]

    def encoder_shapes(self):
        return [tuple(m.weight.T.shape) for m in self.network.encoder if isinstance(m, nn.Linear)]

    def decoder_shapes(self):
        return [tuple(m.weight.T.shape) for m in self.network.decoder if isinstance(m, nn.Linear)]

    def to_tensor(self, batch: np.ndarray) -> torch.Tensor:
        batch = np.asarray(batch)
        if batch.ndim != 2 or batch.shape[1] != self.config.input_dim:
            log.error(f"Batch shape {batch.shape} does not match input dimension {self.config.input_dim}")
            raise DimensionMismatch(
                f"expected {self.config.input_dim} columns, got shape {batch.shape}"
            )
        return torch.as_tensor(batch, dtype=self.dtype)


def make_optimizer(config: AeConfig, network: nn.Module) -> torch.optim.Adam:
    return torch.optim.Adam(
        network.parameters(),
        lr=config.learning_rate,
        betas=(config.adam_beta1, config.adam_beta2),
        eps=config.adam_eps,
    )


def init(config: AeConfig) -> AeModel:
    """Glorot-uniform weights from a generator seeded with config.seed, zero biases, zero moments."""
    config.validate()
    network = Autoencoder(config).to(DTYPES[config.precision])
    generator = torch.Generator().manual_seed(config.seed)
    with torch.no_grad():
        for layer in network.linear_layers():
            nn.init.xavier_uniform_(layer.weight, generator=generator)
            nn.init.zeros_(layer.bias)
    log.debug(f"Autoencoder layers: {config.encoder_dims()} (mirrored decoder)")
    return AeModel(config, network, make_optimizer(config, network))
