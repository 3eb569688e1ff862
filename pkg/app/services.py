import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .bench import (
    ExperimentConfig,
    ResultTable,
    SplitResult,
    emit_report,
    emit_weight_histogram,
    load_dataset,
    make_splits,
    run_experiment,
    run_split,
)
from .bench.report import standard_error
from .database.models import BenchmarkRun, SplitRecord
from .em import VariationalState, load_state, save_state
from .errors import ConfigurationError
from .nets import NetworkConfig, NoiseStructure, WeightSet, export_heatmaps, posterior_moment_map
from .noise import Bernoulli, make_stream, run_gsm_suite
from .objectives import (
    enumerate_expected_log_likelihood,
    enumerate_log_marginal,
    iw_objective,
    mc_lower_bound,
)

logger = logging.getLogger(__name__)


def config_from_state(state: VariationalState, bias: bool = True) -> NetworkConfig:
    """Recover layer widths from the weight shapes of a state dump."""
    widths = [state.mu[0].shape[0] - int(bias)] + [mu.shape[1] for mu in state.mu]
    return NetworkConfig(widths=tuple(widths), bias=bias)


class ShrinkageBenchService:
    """Entry point behind every CLI subcommand.

    With a session maker, benchmark runs are also recorded in the ledger.
    """

    def __init__(self, db_session_maker=None):
        self.db_session_maker = db_session_maker

    # Training and benchmarking

    def train(
        self,
        experiment: ExperimentConfig,
        split_index: int = 0,
        report_path: Optional[Path] = None,
        state_path: Optional[Path] = None,
        histogram_path: Optional[Path] = None,
        bins: int = 20,
        state_in: Optional[Path] = None,
    ) -> SplitResult:
        """Run the protocol on a single split.

        ``state_in`` warm-starts training from a state dump; ``state_path``
        writes one, variational for EM and a point estimate otherwise.
        """
        dataset = load_dataset(experiment)
        experiment.check(dataset.n_features)
        initial_state = None
        if state_in is not None:
            initial_state = load_state(state_in)
            initial_state.check(experiment.network_config(dataset.n_features))
            logger.info(f"♻️ Warm-starting split {split_index} from {state_in}")
        protocol = experiment.protocol
        if not 0 <= split_index < protocol.splits:
            raise ConfigurationError(f"split index must lie in [0, {protocol.splits}), got {split_index}")
        splits = make_splits(dataset, protocol.splits, protocol.test_fraction, protocol.root_seed)
        result = run_split(
            experiment, dataset, splits[split_index], split_index, keep_trainer=True, initial_state=initial_state
        )

        if report_path is not None:
            table = ResultTable(rows=[result], config_echo=experiment.echo(), dataset=dataset.source)
            emit_report(table, report_path)
        if state_path is not None:
            save_state(result.trainer.export_state(), state_path)
        if histogram_path is not None:
            emit_weight_histogram(result, histogram_path, bins)
        return result

    def benchmark(
        self,
        experiment: ExperimentConfig,
        report_path: Path,
        format: Optional[str] = None,
    ) -> ResultTable:
        table = run_experiment(experiment)
        emit_report(table, report_path, format)
        if self.db_session_maker is not None:
            self.record_run(experiment, table)
        return table

    def record_run(self, experiment: ExperimentConfig, table: ResultTable) -> Optional[int]:
        """Store one benchmark in the ledger; returns the run id."""
        summary = table.aggregate()
        variant = experiment.objective.kind if experiment.protocol.model == "mc" else experiment.em.structure
        try:
            with self.db_session_maker() as session:
                run = BenchmarkRun(
                    dataset=table.dataset,
                    model=experiment.protocol.model,
                    variant=variant,
                    root_seed=experiment.protocol.root_seed,
                    split_count=len(table.rows),
                    failures=table.failures,
                    rmse_mean=_finite_or_none(summary["rmse"]),
                    rmse_se=summary["rmse_se"],
                    log_likelihood_mean=_finite_or_none(summary["log_likelihood"]),
                    log_likelihood_se=summary["log_likelihood_se"],
                    config_echo=json.dumps(table.config_echo, sort_keys=True),
                )
                for r in table.rows:
                    run.splits.append(
                        SplitRecord(
                            split_index=r.split,
                            status="failed" if r.failed else "ok",
                            rmse=None if r.failed else r.rmse,
                            log_likelihood=None if r.failed else r.log_likelihood,
                            noise_std=None if r.failed else r.noise_std,
                            epochs=r.epochs,
                            error=r.error,
                        )
                    )
                session.add(run)
                session.commit()
                logger.info(f"💾 Recorded benchmark run {run.id} ({len(table.rows)} splits) in the ledger")
                return run.id
        except Exception as e:
            logger.error(f"Error recording benchmark run in the ledger: {e}")
            return None

    # Diagnostics

    def verify_gsm(self, output_path: Optional[Path] = None, draws: int = 100_000) -> pd.DataFrame:
        suite = run_gsm_suite(draws=draws)
        failed = suite[~suite["passed"]]
        if failed.empty:
            logger.info(f"✅ All {len(suite)} scale-mixture checks passed")
        else:
            logger.warning(f"⚠️ {len(failed)}/{len(suite)} scale-mixture checks failed")
        if output_path is not None:
            output_path = Path(output_path)
            output_path.parent.mkdir(parents=True, exist_ok=True)
            suite.to_csv(output_path, index=False, float_format="%.17g")
        return suite

    def enumerate_map(
        self,
        drop_rate: float = 0.5,
        samples: int = 100_000,
        rows: int = 8,
        seed: int = 0,
        output_path: Optional[Path] = None,
    ) -> Dict[str, float]:
        """Exact versus Monte Carlo objectives on a 2-4-1 ReLU network with dropout masks."""
        config = NetworkConfig.simple(2, [4])
        structure = NoiseStructure(kind="unit", unit_family=Bernoulli.from_drop_rate(drop_rate), output_layer=True)
        rng = make_stream(seed)
        weights = WeightSet.initialize(config, rng)
        x = rng.normal(size=(rows, 2))
        y = np.tanh(x[:, :1] - x[:, 1:]) + 0.1 * rng.normal(size=(rows, 1))

        exact = enumerate_log_marginal(config, weights, structure, x, y)
        expected = enumerate_expected_log_likelihood(config, weights, structure, x, y)
        iw = iw_objective(config, weights, structure, x, y, samples, rng)
        lb = mc_lower_bound(config, weights, structure, x, y, samples, rng)
        # delta-method standard error of log-mean-exp
        iw_se = float(np.std(np.exp(iw.log_likelihoods - iw.value), ddof=1) / np.sqrt(samples))
        report = {
            "drop_rate": drop_rate,
            "samples": samples,
            "mask_bits": len(structure.slots(config)),
            "log_marginal": exact,
            "expected_log_likelihood": expected,
            "iw_estimate": iw.value,
            "iw_standard_error": iw_se,
            "lower_bound_estimate": lb.value,
            "lower_bound_standard_error": standard_error(lb.log_likelihoods),
        }
        logger.info(
            f"🎯 Enumerated log marginal {exact:.6f}; IW {iw.value:.6f} ± {iw_se:.2e}, "
            f"lower bound {lb.value:.6f}"
        )
        if output_path is not None:
            output_path = Path(output_path)
            output_path.parent.mkdir(parents=True, exist_ok=True)
            output_path.write_text(json.dumps(report, indent=2) + "\n")
        return report

    def export_heatmap(
        self, state_path: Path, output_dir: Path, bias: bool = True, layers: Optional[List[int]] = None
    ) -> List[Path]:
        state = load_state(state_path)
        config = config_from_state(state, bias)
        return export_heatmaps(posterior_moment_map(config, state, layers), output_dir)


def _finite_or_none(value: float) -> Optional[float]:
    return value if np.isfinite(value) else None
