from .config import AeConfig  # noqa
from .model import AeModel, Autoencoder, DimensionMismatch, init  # noqa
from .trainer import (TrainingDiverged, encode, forward, load_checkpoint,  # noqa
                      reconstruction_mse, save_checkpoint, train)
