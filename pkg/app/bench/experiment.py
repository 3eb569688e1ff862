import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

from ..config import config
from ..errors import ShrinkageError
from .data import Dataset, load_csv
from .report import ResultTable
from .settings import ExperimentConfig
from .splits import Split, make_splits
from .train import SplitResult, run_split

logger = logging.getLogger(__name__)


def load_dataset(experiment: ExperimentConfig) -> Dataset:
    return load_csv(config.resolve_data_path(experiment.data.path), experiment.data.target)


def _run_split_job(experiment: ExperimentConfig, dataset: Dataset, split: Split, index: int) -> SplitResult:
    """One split; numeric failures become a failed row instead of stopping the run."""
    try:
        return run_split(experiment, dataset, split, index)
    except (ShrinkageError, ArithmeticError) as e:
        logger.error(f"❌ Split {index} failed: {e}")
        return SplitResult(split=index, error=f"{type(e).__name__}: {e}")


def run_experiment(experiment: ExperimentConfig, dataset: Optional[Dataset] = None) -> ResultTable:
    """Run every split of the protocol and collect the results in split order."""
    if dataset is None:
        dataset = load_dataset(experiment)
    experiment.check(dataset.n_features)
    protocol = experiment.protocol
    splits = make_splits(dataset, protocol.splits, protocol.test_fraction, protocol.root_seed)
    logger.info(
        f"🚀 Benchmark on {dataset.source or dataset.target}: {len(splits)} splits, "
        f"model {protocol.model}, {protocol.workers} worker(s)"
    )

    if protocol.workers > 1:
        with ProcessPoolExecutor(max_workers=protocol.workers) as pool:
            futures = [
                pool.submit(_run_split_job, experiment, dataset, split, i) for i, split in enumerate(splits)
            ]
            rows: List[SplitResult] = [f.result() for f in futures]
    else:
        rows = [_run_split_job(experiment, dataset, split, i) for i, split in enumerate(splits)]

    table = ResultTable(rows=rows, config_echo=experiment.echo(), dataset=dataset.source)
    if table.failures:
        logger.warning(f"⚠️ {table.failures}/{len(rows)} splits failed")
    summary = table.aggregate()
    logger.info(
        f"✅ Benchmark finished: RMSE {summary['rmse']:.4f} ± {summary['rmse_se']:.4f}, "
        f"log-likelihood {summary['log_likelihood']:.4f} ± {summary['log_likelihood_se']:.4f}"
    )
    return table
