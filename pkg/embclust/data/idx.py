"""
idx.py: reader and writer for the big-endian IDX tensor format (optionally gzip-compressed).
"""
import gzip
import logging
import pathlib
import struct
from typing import Optional, Tuple, Union

import numpy as np

from ..exceptions import ConfigError
from .dataset import Dataset, make_dataset

log = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxFormatError(ConfigError):
    pass


class LabelCountMismatch(ConfigError):
    pass


def _open(path: Union[str, pathlib.Path]):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx(path: Union[str, pathlib.Path], magic: int) -> np.ndarray:
    """Read an unsigned-byte IDX tensor whose magic must equal `magic`."""
    n_dims = magic & 0xFF
    with _open(path) as f:
        header = f.read(4 + 4 * n_dims)
        if len(header) < 4 + 4 * n_dims:
            log.error(f"{path}: truncated IDX header")
            raise IdxFormatError(f"{path}: truncated header")
        (found,) = struct.unpack(">I", header[:4])
        if found != magic:
            log.error(f"{path}: bad IDX magic {found:#010x}")
            raise IdxFormatError(f"{path}: magic {found:#010x}, expected {magic:#010x}")
        shape = struct.unpack(">" + "I" * n_dims, header[4:])
        payload = f.read()
    expected = int(np.prod(shape))
    if len(payload) != expected:
        log.error(f"{path}: payload has {len(payload)} bytes, dimensions announce {expected}")
        raise IdxFormatError(f"{path}: dimension mismatch ({len(payload)} != {expected})")
    return np.frombuffer(payload, dtype=np.uint8).reshape(shape)


def write_idx(path: Union[str, pathlib.Path], array: np.ndarray) -> None:
    """Write a uint8 array of 1 or 3 dimensions as IDX."""
    array = np.asarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    with (gzip.open(path, "wb") if str(path).endswith(".gz") else open(path, "wb")) as f:
        f.write(struct.pack(">I", magic))
        f.write(struct.pack(">" + "I" * array.ndim, *array.shape))
        f.write(array.tobytes(order="C"))


def read_idx_arrays(
    images_path: Union[str, pathlib.Path], labels_path: Optional[Union[str, pathlib.Path]] = None
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Flattened n×(rows·cols) raw byte values and the raw label ids, if a label file is given."""
    images = read_idx(images_path, IMAGES_MAGIC)
    features = images.reshape(images.shape[0], -1).astype(np.float64)
    labels = None
    if labels_path is not None:
        labels = read_idx(labels_path, LABELS_MAGIC)
        if labels.shape[0] != features.shape[0]:
            log.error(f"{labels.shape[0]} labels for {features.shape[0]} images")
            raise LabelCountMismatch(
                f"{labels_path}: {labels.shape[0]} labels, {images_path}: {features.shape[0]} images"
            )
    log.info(f"{features.shape[0]} images loaded from {images_path}")
    return features, labels


def load_idx(
    images_path: Union[str, pathlib.Path],
    labels_path: Optional[Union[str, pathlib.Path]] = None,
    name: Optional[str] = None,
) -> Dataset:
    """Load an image tensor (and labels) into a Dataset with d = rows×cols raw byte values."""
    features, labels = read_idx_arrays(images_path, labels_path)
    return make_dataset(features, labels, name=name or pathlib.Path(images_path).name)
