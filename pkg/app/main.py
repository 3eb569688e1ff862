import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .bench import load_experiment
from .database.models import create_database, get_session_maker
from .errors import ShrinkageError
from .services import ShrinkageBenchService

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shrinkage-bench",
        description="Multiplicative-noise and EM training of shrinkage-prior networks on UCI regression data",
    )
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_run_file(sub):
        sub.add_argument("run_file", type=Path, help="INI run configuration")
        sub.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override one run-file key (repeatable)",
        )

    train = commands.add_parser("train", help="run the protocol on one split")
    add_run_file(train)
    train.add_argument("--split", type=int, default=0, help="split index")
    train.add_argument("--report", type=Path, help="CSV or JSON report path")
    train.add_argument("--state-out", type=Path, help="save the trained state here")
    train.add_argument("--state-in", type=Path, help="warm-start from a saved state")
    train.add_argument("--histogram", type=Path, help="importance-weight histogram CSV")
    train.add_argument("--bins", type=int, default=20)

    benchmark = commands.add_parser("benchmark", help="run every split and write a report")
    add_run_file(benchmark)
    benchmark.add_argument("--report", type=Path, default=Path("results.json"))
    benchmark.add_argument("--format", choices=["csv", "json"], help="defaults to the report suffix")
    benchmark.add_argument("--ledger", help="SQLAlchemy URL to record the run, e.g. sqlite:///runs.db")

    verify = commands.add_parser("verify-gsm", help="statistical checks of the noise samplers")
    verify.add_argument("--output", type=Path, help="CSV of per-check results")
    verify.add_argument("--draws", type=int, default=100_000)

    enumerate_map = commands.add_parser("enumerate-map", help="exact versus MC objectives on a toy network")
    enumerate_map.add_argument("--drop-rate", type=float, default=0.5)
    enumerate_map.add_argument("--samples", type=int, default=100_000)
    enumerate_map.add_argument("--rows", type=int, default=8)
    enumerate_map.add_argument("--seed", type=int, default=0)
    enumerate_map.add_argument("--output", type=Path, help="JSON output path")

    heatmap = commands.add_parser("export-heatmap", help="posterior second-moment grids from a state dump")
    heatmap.add_argument("state_file", type=Path)
    heatmap.add_argument("output_dir", type=Path)
    heatmap.add_argument("--no-bias", action="store_true", help="the dumped network has no bias rows")
    heatmap.add_argument("--layer", type=int, action="append", dest="layers", help="layer to export (repeatable)")
    return parser


def run(args: argparse.Namespace) -> int:
    if args.command == "benchmark":
        session_maker = get_session_maker(create_database(args.ledger)) if args.ledger else None
        service = ShrinkageBenchService(session_maker)
    else:
        service = ShrinkageBenchService()

    if args.command == "train":
        experiment = load_experiment(args.run_file, args.overrides)
        result = service.train(
            experiment, args.split, args.report, args.state_out, args.histogram, args.bins, args.state_in
        )
        print(f"split {result.split}: RMSE {result.rmse:.6g}, test log-likelihood {result.log_likelihood:.6g}")
    elif args.command == "benchmark":
        experiment = load_experiment(args.run_file, args.overrides)
        table = service.benchmark(experiment, args.report, args.format)
        summary = table.aggregate()
        print(
            f"RMSE {summary['rmse']:.6g} ± {summary['rmse_se']:.3g}, "
            f"test log-likelihood {summary['log_likelihood']:.6g} ± {summary['log_likelihood_se']:.3g}, "
            f"{table.failures} failed split(s)"
        )
    elif args.command == "verify-gsm":
        suite = service.verify_gsm(args.output, args.draws)
        print(suite.to_string(index=False))
        return 0 if bool(suite["passed"].all()) else 1
    elif args.command == "enumerate-map":
        report = service.enumerate_map(args.drop_rate, args.samples, args.rows, args.seed, args.output)
        for key, value in report.items():
            print(f"{key}: {value}")
    elif args.command == "export-heatmap":
        paths = service.export_heatmap(args.state_file, args.output_dir, not args.no_bias, args.layers)
        for path in paths:
            print(path)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    try:
        return run(args)
    except ShrinkageError as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
