from .baselines import baselines_for
from .data import Dataset, Standardization, load_csv
from .experiment import load_dataset, run_experiment
from .report import ResultTable, emit_report, emit_weight_histogram, standard_error, weight_histogram
from .settings import ExperimentConfig, load_experiment
from .splits import SplitData, holdout, make_splits, prepare_split
from .train import (
    NOISE_GRID,
    EMTrainer,
    GaussianPredictive,
    MCTrainer,
    MixturePredictive,
    SplitResult,
    Trainer,
    evaluate_split,
    fit_with_early_stopping,
    make_trainer,
    run_split,
    select_noise_std,
)

__all__ = [
    "Dataset",
    "EMTrainer",
    "ExperimentConfig",
    "GaussianPredictive",
    "MCTrainer",
    "MixturePredictive",
    "NOISE_GRID",
    "ResultTable",
    "SplitData",
    "SplitResult",
    "Standardization",
    "Trainer",
    "baselines_for",
    "emit_report",
    "emit_weight_histogram",
    "evaluate_split",
    "fit_with_early_stopping",
    "holdout",
    "load_csv",
    "load_dataset",
    "load_experiment",
    "make_splits",
    "make_trainer",
    "prepare_split",
    "run_experiment",
    "run_split",
    "select_noise_std",
    "standard_error",
    "weight_histogram",
]
