"""
trainer.py: mini-batch Adam training on reconstruction MSE, encoding and checkpoints.
"""
import json
import logging
import pathlib
from typing import Optional, Tuple, Union

import numpy as np
import torch
from torch.utils.data import DataLoader, TensorDataset

from ..container import load_container, save_container
from ..data.dataset import Dataset
from ..embedding import AUTOENCODED, Embedding, make_embedding
from ..exceptions import ConfigError, EmbclustError
from .config import AeConfig
from .model import AeModel, DimensionMismatch, init

log = logging.getLogger(__name__)

LOG_EVERY = 50
# fields baked into the network and its optimizer when the model was built
BUILD_FIELDS = (
    "input_dim", "bottleneck_dim", "hidden_dims", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps", "precision"
)


class TrainingDiverged(EmbclustError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite training loss {loss} at epoch {epoch}")
        self.epoch = epoch


def forward(model: AeModel, batch: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Return (embedding, reconstruction) of a batch without tracking gradients."""
    x = model.to_tensor(batch)
    model.network.eval()
    with torch.no_grad():
        h, r = model.network(x)
    return h.numpy(), r.numpy()


def _check_dataset(model: AeModel, ds: Dataset) -> None:
    if ds.d != model.config.input_dim:
        log.error(f"{ds.name} has {ds.d} features, the autoencoder expects {model.config.input_dim}")
        raise DimensionMismatch(f"{ds.name}: d={ds.d}, model input_dim={model.config.input_dim}")


def _check_override(built: AeConfig, config: AeConfig) -> None:
    built, config = (c._replace(hidden_dims=tuple(c.hidden_dims)) for c in (built, config))
    changed = [field for field in BUILD_FIELDS if getattr(built, field) != getattr(config, field)]
    if changed:
        log.error(f"Training config changes {changed}, which the model was built with")
        raise ConfigError(f"cannot change {changed} of a built autoencoder, only epochs, batch_size and seed")


def train(
    model: AeModel, ds: Dataset, config: Optional[AeConfig] = None
) -> Tuple[AeModel, np.ndarray]:
    """Run config.epochs epochs of shuffled mini-batch Adam. No early stopping.

    loss_history[e] is the sample-weighted mean batch loss of epoch e.
    An override config may change epochs, batch_size and seed only.
    """
    config = config or model.config
    config.validate()
    _check_override(model.config, config)
    _check_dataset(model, ds)
    x = model.to_tensor(ds.features)
    generator = torch.Generator().manual_seed(config.seed + 1)
    loader = DataLoader(
        TensorDataset(x),
        batch_size=config.batch_size,
        shuffle=True,
        drop_last=False,
        generator=generator,
    )
    criterion = torch.nn.MSELoss()
    network, optimizer = model.network, model.optimizer
    network.train()
    history = np.empty(config.epochs, dtype=np.float64)
    for epoch in range(config.epochs):
        total = 0.0
        for (batch,) in loader:
            optimizer.zero_grad()
            _, reconstruction = network(batch)
            loss = criterion(reconstruction, batch)
            value = loss.item()
            if not np.isfinite(value):
                log.error(f"Autoencoder diverged at epoch {epoch + 1}")
                raise TrainingDiverged(epoch + 1, value)
            loss.backward()
            optimizer.step()
            total += value * batch.shape[0]
        if not all(torch.isfinite(p).all() for p in network.parameters()):
            log.error(f"Autoencoder parameters became non-finite at epoch {epoch + 1}")
            raise TrainingDiverged(epoch + 1, float("nan"))
        history[epoch] = total / ds.n
        if (epoch + 1) % LOG_EVERY == 0 or epoch + 1 == config.epochs:
            log.info(f"AE epoch {epoch + 1}/{config.epochs}: loss {history[epoch]:.6f}")
        else:
            log.debug(f"AE epoch {epoch + 1}: loss {history[epoch]:.6f}")
    network.eval()
    return model, history


def encode(model: AeModel, ds: Dataset) -> Embedding:
    _check_dataset(model, ds)
    h, _ = forward(model, ds.features)
    return make_embedding(h, AUTOENCODED)


def reconstruction_mse(model: AeModel, ds: Dataset) -> float:
    """Full-batch mean over samples and features of (g(f(x)) - x)²."""
    _check_dataset(model, ds)
    _, r = forward(model, ds.features)
    return float(np.mean((r - ds.features) ** 2))


def save_checkpoint(
    model: AeModel, path: Union[str, pathlib.Path], loss_history: Optional[np.ndarray] = None
) -> str:
    """Store config, every parameter tensor and the Adam moments."""
    arrays = {
        f"param.{name}": tensor.detach().numpy()
        for name, tensor in model.network.state_dict().items()
    }
    optim_state = model.optimizer.state_dict()
    for index, state in optim_state["state"].items():
        for key, value in state.items():
            arrays[f"adam.{index}.{key}"] = torch.as_tensor(value).numpy()
    if loss_history is not None:
        arrays["loss_history"] = np.asarray(loss_history)
    meta = {
        "config": model.config._asdict(),
        "param_groups": json.loads(json.dumps(optim_state["param_groups"])),
    }
    return save_container(path, "autoencoder", meta, arrays)


def load_checkpoint(path: Union[str, pathlib.Path]) -> Tuple[AeModel, Optional[np.ndarray]]:
    meta, arrays = load_container(path, "autoencoder")
    raw = meta["config"]
    raw["hidden_dims"] = tuple(raw["hidden_dims"])
    model = init(AeConfig(**raw))
    model.network.load_state_dict(
        {
            name[len("param."):]: torch.from_numpy(array.copy())
            for name, array in arrays.items()
            if name.startswith("param.")
        }
    )
    state = {}
    for name, array in arrays.items():
        if not name.startswith("adam."):
            continue
        _, index, key = name.split(".", 2)
        state.setdefault(int(index), {})[key] = torch.from_numpy(array.copy())
    groups = meta["param_groups"]
    for group in groups:
        group["betas"] = tuple(group["betas"])
    model.optimizer.load_state_dict({"state": state, "param_groups": groups})
    log.info(f"Autoencoder checkpoint loaded from {path}")
    return model, arrays.get("loss_history")
