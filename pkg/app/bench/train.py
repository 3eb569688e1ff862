import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from ..em import INITIAL_RHO, VariationalState, em_step, predictive_distribution
from ..nets import NetworkConfig, WeightSet, forward_deterministic, predict_mc
from ..noise import make_stream
from ..objectives import evaluate_objective
from ..tensor import Adam
from .data import Dataset
from .settings import ExperimentConfig
from .splits import TRAINING_STREAM, VALIDATION_STREAM, Split, SplitData, holdout, prepare_split

logger = logging.getLogger(__name__)

# candidate observation noise standard deviations, standardized units
NOISE_GRID = np.logspace(-3.0, 1.0, 30)


class Predictive(ABC):
    """Predictive distribution over standardized targets at a set of inputs."""

    mean: np.ndarray

    @abstractmethod
    def log_likelihood(self, y: np.ndarray, noise_std: float) -> np.ndarray:
        """Per-row log density of ``y`` with observation noise ``noise_std``."""


class MixturePredictive(Predictive):
    """Equal-weight mixture of Gaussians centred on S noisy forward passes."""

    def __init__(self, draws: np.ndarray):
        self.draws = draws
        self.mean = draws.mean(axis=0)

    def log_likelihood(self, y, noise_std):
        per_draw = norm.logpdf(y[None], loc=self.draws, scale=noise_std).sum(axis=2)
        return logsumexp(per_draw, axis=0) - np.log(len(self.draws))


class GaussianPredictive(Predictive):
    """Gaussian with the spread of q(W) added to the observation noise."""

    def __init__(self, mean: np.ndarray, spread: np.ndarray):
        self.mean = mean
        self.spread = spread

    def log_likelihood(self, y, noise_std):
        scale = np.sqrt(self.spread + noise_std ** 2)
        return norm.logpdf(y, loc=self.mean, scale=scale).sum(axis=1)


class Trainer(ABC):
    """Mini-batch Adam training of one model on standardized data."""

    def __init__(self, experiment: ExperimentConfig, config: NetworkConfig, rng: np.random.Generator):
        self.experiment = experiment
        self.config = config
        self.rng = rng
        self.optimizer = Adam(step_size=experiment.protocol.step_size)
        self.importance_weights: List[np.ndarray] = []

    def batches(self, n: int):
        size = min(self.experiment.protocol.batch_size, n)
        order = self.rng.permutation(n)
        for start in range(0, n, size):
            yield order[start:start + size]

    @abstractmethod
    def train_epoch(self, x: np.ndarray, y: np.ndarray, collect: bool = False) -> float:
        ...

    @abstractmethod
    def predictive(self, x: np.ndarray, samples: int) -> Predictive:
        ...

    @abstractmethod
    def parameters(self) -> List[np.ndarray]:
        ...

    @abstractmethod
    def snapshot(self):
        ...

    @abstractmethod
    def restore(self, snapshot) -> None:
        ...

    @abstractmethod
    def export_state(self) -> VariationalState:
        """The trained parameters in the state-dump layout."""

    @abstractmethod
    def warm_start(self, state: VariationalState) -> None:
        """Replace the initial parameters with those of a loaded dump."""


class MCTrainer(Trainer):
    """Multiplicative-noise training with one of the Monte Carlo objectives."""

    def __init__(self, experiment, config, rng):
        super().__init__(experiment, config, rng)
        self.spec = experiment.objective
        self.structure = experiment.noise_structure()
        self.weights = WeightSet.initialize(config, rng)

    def train_epoch(self, x, y, collect=False):
        n = len(x)
        total = 0.0
        for rows in self.batches(n):
            result = evaluate_objective(
                self.spec,
                self.config,
                self.weights,
                self.structure,
                x[rows],
                y[rows],
                rng=self.rng,
                decay_scale=len(rows) / n,
            )
            self.weights = WeightSet(tuple(self.optimizer.ascend(list(self.weights.layers), result.gradient)))
            if collect and result.weights is not None:
                self.importance_weights.append(result.weights.normalized.copy())
            total += result.value
        return total

    def predictive(self, x, samples):
        if self.spec.kind == "HP":
            return MixturePredictive(forward_deterministic(self.config, self.weights, x)[None])
        return MixturePredictive(predict_mc(self.config, self.weights, self.structure, x, samples, self.rng).samples)

    def parameters(self):
        return list(self.weights.layers)

    def snapshot(self):
        return self.weights

    def restore(self, snapshot):
        self.weights = snapshot

    def export_state(self):
        return VariationalState.point_mass(self.weights)

    def warm_start(self, state):
        state.check(self.config)
        self.weights = state.mean_weights()


class EMTrainer(Trainer):
    """Variational EM with closed-form scale updates."""

    def __init__(self, experiment, config, rng):
        super().__init__(experiment, config, rng)
        self.kind = experiment.em.structure
        self.hyperprior = experiment.em.hyperprior
        self.state = VariationalState.initialize(config, self.kind, rng)

    def train_epoch(self, x, y, collect=False):
        n = len(x)
        total = 0.0
        for rows in self.batches(n):
            result = em_step(
                self.config,
                self.state,
                self.hyperprior,
                self.kind,
                x[rows],
                y[rows],
                self.optimizer,
                self.rng,
                data_scale=n / len(rows),
            )
            total += result.value
        return total

    def predictive(self, x, samples):
        mean, variance = predictive_distribution(self.config, self.state, x, samples, self.rng)
        spread = np.maximum(variance - self.config.noise_std ** 2, 0.0)
        return GaussianPredictive(mean, spread)

    def parameters(self):
        return [m for m in self.state.mu] + [r for r in self.state.rho]

    def snapshot(self):
        return self.state.copy()

    def restore(self, snapshot):
        self.state = snapshot.copy()

    def export_state(self):
        return self.state.copy()

    def warm_start(self, state):
        """Means and variances from the dump; scales the dump lacks stay at 1.

        Zero variances from a point-estimate dump restart at the initial variance.
        """
        state.check(self.config)
        fresh = self.state
        self.state = VariationalState(
            mu=[m.copy() for m in state.mu],
            rho=[np.where(np.isfinite(r), r, INITIAL_RHO) for r in state.rho],
            xi={l: state.xi.get(l, v).copy() for l, v in fresh.xi.items()},
            tau={l: state.tau.get(l, v) for l, v in fresh.tau.items()},
        )


def make_trainer(
    experiment: ExperimentConfig,
    config: NetworkConfig,
    rng: np.random.Generator,
    initial_state: Optional[VariationalState] = None,
) -> Trainer:
    trainer_class = EMTrainer if experiment.protocol.model == "em" else MCTrainer
    trainer = trainer_class(experiment, config, rng)
    if initial_state is not None:
        trainer.warm_start(initial_state)
    return trainer


def fit_with_early_stopping(
    trainer: Trainer, x: np.ndarray, y: np.ndarray, x_val: np.ndarray, y_val: np.ndarray
) -> int:
    """Train until validation log-likelihood stops improving; restore the best epoch.

    Each epoch is scored at its best grid noise level.

    Returns the best epoch count.
    """
    protocol = trainer.experiment.protocol
    best_score, best_epoch, best = -np.inf, 0, trainer.snapshot()
    for epoch in range(1, protocol.epochs + 1):
        objective = trainer.train_epoch(x, y)
        predictive = trainer.predictive(x_val, protocol.validation_samples)
        _, score = select_noise_std(predictive, y_val)
        logger.debug(f"epoch {epoch}: objective {objective:.4f}, validation log-likelihood {score:.4f}")
        if score > best_score:
            best_score, best_epoch, best = score, epoch, trainer.snapshot()
        elif epoch - best_epoch >= protocol.patience:
            logger.debug(f"stopping at epoch {epoch}; best was {best_epoch}")
            break
    trainer.restore(best)
    return max(best_epoch, 1)


def select_noise_std(predictive: Predictive, y: np.ndarray, grid: np.ndarray = NOISE_GRID) -> Tuple[float, float]:
    """Grid value with the best mean held-out log-likelihood, and that likelihood."""
    scores = np.array([np.mean(predictive.log_likelihood(y, s)) for s in grid])
    best = int(np.argmax(scores))
    return float(grid[best]), float(scores[best])


@dataclass
class SplitResult:
    """Outcome of one train/test split; metrics are NaN when the split failed."""

    split: int
    rmse: float = float("nan")
    log_likelihood: float = float("nan")
    rmse_standardized: float = float("nan")
    noise_std: float = float("nan")
    epochs: int = 0
    error: Optional[str] = None
    importance_weights: List[np.ndarray] = field(default_factory=list, repr=False)
    parameters: List[np.ndarray] = field(default_factory=list, repr=False)
    trainer: Optional[Trainer] = field(default=None, repr=False, compare=False)

    @property
    def failed(self) -> bool:
        return self.error is not None


def evaluate_split(trainer: Trainer, data: SplitData, noise_std: float) -> Tuple[float, float, float]:
    """(RMSE in original units, RMSE standardized, mean log-likelihood in original units)."""
    predictive = trainer.predictive(data.x_test, trainer.experiment.protocol.test_samples)
    rmse_standardized = float(np.sqrt(np.mean((predictive.mean - data.y_test) ** 2)))
    prediction = data.y_stats.invert(predictive.mean[:, 0])
    truth = data.y_stats.invert(data.y_test[:, 0])
    rmse = float(np.sqrt(np.mean((prediction - truth) ** 2)))
    log_likelihood = float(np.mean(predictive.log_likelihood(data.y_test, noise_std))) - float(
        np.log(data.target_std)
    )
    return rmse, rmse_standardized, log_likelihood


def run_split(
    experiment: ExperimentConfig,
    dataset: Dataset,
    split: Split,
    index: int,
    keep_trainer: bool = False,
    initial_state: Optional[VariationalState] = None,
) -> SplitResult:
    """Full protocol on one split; raises on divergent training.

    Fits on the training rows minus a validation slice with early stopping,
    picks the observation noise on that slice, then refits on every training
    row for the selected number of epochs. Both fits start from
    ``initial_state`` when one is given.
    """
    protocol = experiment.protocol
    seed = protocol.root_seed
    data = prepare_split(dataset, split, index)

    rows = np.arange(len(data.x_train))
    fit_rows, val_rows = holdout(rows, protocol.validation_fraction, make_stream(seed, index, VALIDATION_STREAM))
    config = experiment.network_config(dataset.n_features)
    first = make_trainer(experiment, config, make_stream(seed, index, TRAINING_STREAM, 0), initial_state)
    epochs = fit_with_early_stopping(
        first, data.x_train[fit_rows], data.y_train[fit_rows], data.x_train[val_rows], data.y_train[val_rows]
    )
    validation = first.predictive(data.x_train[val_rows], protocol.test_samples)
    noise_std, score = select_noise_std(validation, data.y_train[val_rows])
    logger.debug(f"split {index}: {epochs} epochs, noise std {noise_std:.4g} (validation {score:.4f})")

    refit_config = experiment.network_config(dataset.n_features, noise_std)
    refit = make_trainer(experiment, refit_config, make_stream(seed, index, TRAINING_STREAM, 1), initial_state)
    for epoch in range(1, epochs + 1):
        refit.train_epoch(data.x_train, data.y_train, collect=epoch == epochs)

    rmse, rmse_standardized, log_likelihood = evaluate_split(refit, data, noise_std)
    logger.info(f"✅ Split {index}: RMSE {rmse:.4f}, test log-likelihood {log_likelihood:.4f}")
    return SplitResult(
        split=index,
        rmse=rmse,
        log_likelihood=log_likelihood,
        rmse_standardized=rmse_standardized,
        noise_std=noise_std,
        epochs=epochs,
        importance_weights=refit.importance_weights,
        parameters=[p.copy() for p in refit.parameters()],
        trainer=refit if keep_trainer else None,
    )
