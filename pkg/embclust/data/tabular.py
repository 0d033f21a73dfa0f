"""
tabular.py: numeric CSV loader.
"""
import logging
import pathlib
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..exceptions import ConfigError
from .dataset import Dataset, make_dataset

log = logging.getLogger(__name__)


class CsvParseError(ConfigError):
    pass


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _resolve_label_column(frame: pd.DataFrame, label_column: str) -> str:
    if label_column in frame.columns:
        return label_column
    # headerless files name columns by position; negative positions count from the end
    if label_column.lstrip("-").isdigit():
        position = int(label_column)
        if -frame.shape[1] <= position < frame.shape[1]:
            return frame.columns[position]
    log.error(f"Label column '{label_column}' not found")
    raise ConfigError(f"label column '{label_column}' not in {list(frame.columns)}")


def read_csv_arrays(
    path: Union[str, pathlib.Path], label_column: Optional[str] = None
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Parse a rectangular numeric CSV into features and raw integer labels. A non-numeric first row is the header."""
    try:
        raw = pd.read_csv(
            path, header=None, dtype=str, keep_default_na=False, skipinitialspace=True,
            encoding="utf-8",
        )
    except pd.errors.ParserError as e:
        # pandas reports the 1-based file line of the first over-long row
        log.error(f"{path}: ragged rows: {e}")
        raise CsvParseError(f"{path}: ragged rows: {e}")
    except pd.errors.EmptyDataError:
        raise CsvParseError(f"{path}: empty file")

    has_header = not all(_is_number(cell) for cell in raw.iloc[0])
    if has_header:
        frame = raw.iloc[1:].reset_index(drop=True)
        frame.columns = [str(c).strip() for c in raw.iloc[0]]
    else:
        frame = raw
        frame.columns = [str(i) for i in range(raw.shape[1])]
    if frame.shape[0] == 0:
        raise CsvParseError(f"{path}: no data rows")

    row_offset = 1 if has_header else 0
    short = (frame.isna() | (frame == "")).any(axis=1).to_numpy()
    if short.any():
        row = int(np.argmax(short))
        log.error(f"{path}: row {row} has missing cells")
        raise CsvParseError(f"{path}: ragged or empty cell at data row {row} (file line {row + row_offset + 1})")
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        row = int(np.argmax(bad))
        log.error(f"{path}: non-numeric cell in row {row}")
        raise CsvParseError(f"{path}: non-numeric cell at data row {row} (file line {row + row_offset + 1})")

    labels = None
    if label_column is not None:
        column = _resolve_label_column(numeric, label_column)
        labels = numeric.pop(column).to_numpy()
        if not np.all(labels == np.round(labels)):
            raise CsvParseError(f"{path}: label column '{column}' holds non-integer values")
        labels = labels.astype(np.int64)
    log.info(f"{numeric.shape[0]} rows loaded from {path}")
    return numeric.to_numpy(dtype=np.float64), labels


def load_csv(
    path: Union[str, pathlib.Path],
    label_column: Optional[str] = None,
    name: Optional[str] = None,
    c_hint: Optional[int] = None,
) -> Dataset:
    """Load a numeric CSV into a Dataset with labels remapped to 0..c-1."""
    features, labels = read_csv_arrays(path, label_column)
    return make_dataset(features, labels, name=name or pathlib.Path(path).stem, c_hint=c_hint)
