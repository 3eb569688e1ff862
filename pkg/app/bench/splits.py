import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..errors import ConfigurationError, DataError
from ..noise import make_stream
from .data import Dataset, Standardization

logger = logging.getLogger(__name__)

MIN_ROWS = 10

# purpose keys under make_stream(root_seed, split_index, ...)
PERMUTATION_STREAM = 0
VALIDATION_STREAM = 1
TRAINING_STREAM = 2

Split = Tuple[np.ndarray, np.ndarray]


def make_splits(dataset: Dataset, split_count: int, test_fraction: float, root_seed: int) -> List[Split]:
    """(train rows, test rows) per split, each a random permutation of all rows.

    Split i depends only on (root_seed, i); index arrays are sorted.
    """
    if dataset.n_rows < MIN_ROWS:
        raise DataError(f"need at least {MIN_ROWS} rows to split, got {dataset.n_rows}")
    if split_count < 1:
        raise ConfigurationError(f"split count must be at least 1, got {split_count}")
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test fraction must lie in (0, 1), got {test_fraction}")

    n = dataset.n_rows
    n_test = min(max(int(round(test_fraction * n)), 1), n - 1)
    splits = []
    for i in range(split_count):
        order = make_stream(root_seed, i, PERMUTATION_STREAM).permutation(n)
        splits.append((np.sort(order[n_test:]), np.sort(order[:n_test])))
    logger.debug(f"made {split_count} splits of {n} rows: {n - n_test} train / {n_test} test")
    return splits


def holdout(rows: np.ndarray, fraction: float, rng: np.random.Generator) -> Split:
    """Split training rows into (fit rows, validation rows)."""
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"validation fraction must lie in (0, 1), got {fraction}")
    n_val = min(max(int(round(fraction * len(rows))), 1), len(rows) - 1)
    order = rng.permutation(len(rows))
    return np.sort(rows[order[n_val:]]), np.sort(rows[order[:n_val]])


@dataclass(frozen=True)
class SplitData:
    """One split, standardized with statistics of its training rows only."""

    index: int
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    x_stats: Standardization
    y_stats: Standardization

    @property
    def target_std(self) -> float:
        return float(self.y_stats.std)


def prepare_split(dataset: Dataset, split: Split, index: int = 0) -> SplitData:
    train, test = split
    x_stats, y_stats = dataset.statistics(train)
    return SplitData(
        index=index,
        x_train=x_stats.apply(dataset.x[train]),
        y_train=y_stats.apply(dataset.y[train])[:, None],
        x_test=x_stats.apply(dataset.x[test]),
        y_test=y_stats.apply(dataset.y[test])[:, None],
        x_stats=x_stats,
        y_stats=y_stats,
    )
