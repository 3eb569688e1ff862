import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from ..errors import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Standardization:
    """Per-column mean and standard deviation; constant columns keep std 1."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "Standardization":
        values = np.asarray(values, dtype=np.float64)
        mean = values.mean(axis=0)
        std = values.std(axis=0)
        std = np.where(std > 0.0, std, 1.0)
        return cls(mean=mean, std=std)

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


@dataclass(frozen=True)
class Dataset:
    """Feature matrix X (N × D) and target vector y (N,), in original units."""

    x: np.ndarray
    y: np.ndarray
    feature_names: Tuple[str, ...]
    target: str
    source: Optional[str] = None

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def statistics(self, rows: Optional[np.ndarray] = None) -> Tuple[Standardization, Standardization]:
        """Standardization of X and y fitted on ``rows`` (all rows by default)."""
        if rows is None:
            rows = np.arange(self.n_rows)
        return Standardization.fit(self.x[rows]), Standardization.fit(self.y[rows])


def load_csv(path, target: str) -> Dataset:
    """Read a numeric CSV with a header row and split out the target column.

    Rows in errors are 1-based data rows, the header excluded.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file {path} does not exist")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError(f"dataset file {path} is empty")
    if frame.empty:
        raise DataError(f"dataset file {path} has a header but no rows")
    frame.columns = [str(c).strip() for c in frame.columns]
    if target not in frame.columns:
        raise DataError(f"target column missing from {path}; columns are {list(frame.columns)}", column=target)

    numeric = {}
    for column in frame.columns:
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce")
        bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=np.float64, na_value=np.nan))
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            cell = raw.iloc[row]
            reason = "missing value" if cell == "" else f"non-numeric value {cell!r}"
            raise DataError(f"{reason} in {path}", row=row + 1, column=column)
        numeric[column] = values.to_numpy(dtype=np.float64)

    features = tuple(c for c in frame.columns if c != target)
    if not features:
        raise DataError(f"{path} has no feature columns besides '{target}'")
    x = np.column_stack([numeric[c] for c in features])
    y = numeric[target]
    logger.info(f"📂 Loaded {path.name}: N={len(y)}, D={len(features)}, target '{target}'")
    return Dataset(x=x, y=y, feature_names=features, target=target, source=str(path))
