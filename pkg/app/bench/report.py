import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import ConfigurationError, DataError
from .baselines import baselines_for
from .train import SplitResult

logger = logging.getLogger(__name__)

METRICS = ("rmse", "log_likelihood")
PROTOCOL_NOTE = "flat epoch cap with early stopping on validation log-likelihood replaces dataset-scaled epochs"


def standard_error(values: Sequence[float]) -> float:
    """Sample standard deviation over √n; 0 for fewer than two values."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


@dataclass
class ResultTable:
    """Per-split test metrics of one benchmark run, ordered by split index."""

    rows: List[SplitResult]
    config_echo: Dict[str, Any] = field(default_factory=dict)
    dataset: Optional[str] = None

    @property
    def succeeded(self) -> List[SplitResult]:
        return [r for r in self.rows if not r.failed]

    @property
    def failures(self) -> int:
        return sum(r.failed for r in self.rows)

    def aggregate(self) -> Dict[str, float]:
        """Mean and standard error of each metric over successful splits."""
        summary: Dict[str, float] = {}
        for metric in METRICS:
            values = [getattr(r, metric) for r in self.succeeded]
            summary[metric] = float(np.mean(values)) if values else float("nan")
            summary[f"{metric}_se"] = standard_error(values)
        return summary

    def frame(self) -> pd.DataFrame:
        """Per-split rows followed by the aggregate row."""
        records = [
            {
                "split": str(r.split),
                "status": "failed" if r.failed else "ok",
                "rmse": r.rmse,
                "rmse_se": np.nan,
                "log_likelihood": r.log_likelihood,
                "log_likelihood_se": np.nan,
                "noise_std": r.noise_std,
                "epochs": r.epochs,
                "error": r.error or "",
            }
            for r in self.rows
        ]
        records.append(
            {
                "split": "aggregate",
                "status": f"{self.failures} failed",
                **self.aggregate(),
                "noise_std": np.nan,
                "epochs": np.nan,
                "error": "",
            }
        )
        return pd.DataFrame.from_records(records)


def _target(path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"cannot create directory for {path}: {e}")
    return path


def emit_report(table: ResultTable, path: Union[str, Path], format: Optional[str] = None) -> Path:
    """Write the table as CSV or JSON; the format defaults to the file suffix.

    JSON carries the full configuration echo and the published baselines for
    the dataset next to the produced numbers.
    """
    path = _target(path)
    format = (format or path.suffix.lstrip(".") or "csv").lower()
    try:
        if format == "csv":
            table.frame().to_csv(path, index=False, float_format="%.17g")
        elif format == "json":
            document = {
                "dataset": table.dataset,
                "config": table.config_echo,
                "splits": [
                    {
                        "split": r.split,
                        "status": "failed" if r.failed else "ok",
                        "rmse": None if r.failed else r.rmse,
                        "log_likelihood": None if r.failed else r.log_likelihood,
                        "noise_std": None if r.failed else r.noise_std,
                        "epochs": r.epochs,
                        "error": r.error,
                    }
                    for r in table.rows
                ],
                "aggregate": table.aggregate(),
                "failures": table.failures,
                "baselines": baselines_for(table.dataset),
                "protocol_note": PROTOCOL_NOTE,
            }
            path.write_text(json.dumps(document, indent=2) + "\n")
        else:
            raise ConfigurationError(f"unknown report format '{format}'; use csv or json")
    except OSError as e:
        raise DataError(f"cannot write report to {path}: {e}")
    logger.info(f"📊 Wrote {format.upper()} report with {len(table.rows)} splits to {path}")
    return path


def weight_histogram(weights: Sequence[np.ndarray], bins: int = 20) -> pd.DataFrame:
    """Counts of normalized importance weights over [0, 1]."""
    if not weights:
        raise ConfigurationError("no importance weights were collected; train an MC model with LB, IW or TA")
    values = np.concatenate([np.ravel(w) for w in weights])
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    return pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts})


def emit_weight_histogram(
    run: Union[SplitResult, Sequence[np.ndarray]], path: Union[str, Path], bins: int = 20
) -> pd.DataFrame:
    """Histogram of the weights realized over the final training epoch, as CSV."""
    weights = run.importance_weights if isinstance(run, SplitResult) else run
    histogram = weight_histogram(weights, bins)
    path = _target(path)
    try:
        histogram.to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise DataError(f"cannot write histogram to {path}: {e}")
    logger.info(f"📊 Wrote importance-weight histogram ({len(weights)} vectors) to {path}")
    return histogram
