#!/usr/bin/env python3
"""
End-to-end tests of the command-line subcommands and the service behind them.
"""

import json

import numpy as np
import pandas as pd
import pytest
from sqlalchemy import select

from app.database.models import BenchmarkRun, SplitRecord, create_database, get_session_maker
from app.em import load_state
from app.main import main
from app.noise import make_stream


def _run_file(tmp_path, extra=()):
    rng = make_stream(21)
    x = rng.normal(size=(80, 2))
    frame = pd.DataFrame(x, columns=["u", "v"])
    frame["target"] = np.tanh(x[:, 0]) - 0.3 * x[:, 1] + 0.05 * rng.normal(size=80)
    data = tmp_path / "toy.csv"
    frame.to_csv(data, index=False, float_format="%.17g")
    run_file = tmp_path / "run.ini"
    lines = [
        "[data]",
        f"path = {data}",
        "target = target",
        "[network]",
        "hidden = 6, 6",
        "[objective]",
        "kind = IW",
        "samples = 4",
        "[protocol]",
        "splits = 2",
        "epochs = 3",
        "patience = 2",
        "batch_size = 20",
        "step_size = 0.01",
        "test_samples = 10",
        "validation_samples = 4",
        *extra,
    ]
    run_file.write_text("\n".join(lines) + "\n")
    return run_file


def test_benchmark_writes_report_and_ledger(tmp_path):
    run_file = _run_file(tmp_path)
    ledger = f"sqlite:///{tmp_path / 'runs.db'}"
    report = tmp_path / "out" / "results.json"
    assert main(["benchmark", str(run_file), "--report", str(report), "--ledger", ledger]) == 0

    document = json.loads(report.read_text())
    assert len(document["splits"]) == 2
    assert document["config"]["objective"]["kind"] == "IW"

    session_maker = get_session_maker(create_database(ledger))
    with session_maker() as session:
        runs = session.scalars(select(BenchmarkRun)).all()
        assert len(runs) == 1
        assert runs[0].variant == "IW"
        assert runs[0].config()["protocol"]["splits"] == 2
        records = session.scalars(select(SplitRecord).order_by(SplitRecord.split_index)).all()
        assert [r.split_index for r in records] == [0, 1]
        assert records[0].rmse == pytest.approx(document["splits"][0]["rmse"])


def test_train_em_then_export_heatmap(tmp_path):
    run_file = _run_file(tmp_path, extra=["[em]", "structure = ARD-ADD", "hyperprior = inverse_gamma"])
    state = tmp_path / "state.txt"
    code = main(
        ["train", str(run_file), "--split", "1", "--state-out", str(state), "--set", "protocol.model=em",
         "--set", "network.residual=true"]
    )
    assert code == 0
    assert state.read_text().startswith("# layer 1 3 6 mu")

    out = tmp_path / "heatmaps"
    assert main(["export-heatmap", str(state), str(out)]) == 0
    grid = pd.read_csv(out / "layer_2.csv", header=None)
    assert grid.shape == (6, 6)
    assert (grid.to_numpy() > 0.0).all()


def test_dropout_state_exports_squared_weights(tmp_path):
    run_file = _run_file(tmp_path)
    state = tmp_path / "weights.txt"
    assert main(["train", str(run_file), "--state-out", str(state)]) == 0
    assert " rho\n" not in state.read_text()

    out = tmp_path / "heatmaps"
    assert main(["export-heatmap", str(state), str(out)]) == 0
    grid = pd.read_csv(out / "layer_2.csv", header=None).to_numpy()
    weights = load_state(state).mu[1][:6]
    np.testing.assert_allclose(grid, weights * weights, rtol=1e-15)


def test_train_resumes_from_saved_state(tmp_path):
    run_file = _run_file(tmp_path, extra=["[em]", "structure = ARD"])
    first, second = tmp_path / "first.txt", tmp_path / "second.txt"
    assert main(["train", str(run_file), "--set", "protocol.model=em", "--state-out", str(first)]) == 0
    code = main(
        ["train", str(run_file), "--set", "protocol.model=em", "--state-in", str(first), "--state-out", str(second)]
    )
    assert code == 0
    before, after = load_state(first), load_state(second)
    assert [m.shape for m in before.mu] == [m.shape for m in after.mu]
    assert any(not np.array_equal(a, b) for a, b in zip(before.mu, after.mu))

    # a dump from a different architecture is a configuration error
    assert main(["train", str(run_file), "--set", "network.hidden=4", "--state-in", str(first)]) == 2


def test_train_writes_importance_weight_histogram(tmp_path):
    run_file = _run_file(tmp_path)
    histogram = tmp_path / "weights.csv"
    assert main(["train", str(run_file), "--histogram", str(histogram), "--bins", "10"]) == 0
    frame = pd.read_csv(histogram)
    assert len(frame) == 10
    # 72 training rows give 4 batches of 20 in the last epoch, 4 samples each
    assert frame["count"].sum() == 4 * 4


def test_enumerate_map_output(tmp_path):
    output = tmp_path / "enumeration.json"
    assert main(["enumerate-map", "--samples", "20000", "--output", str(output)]) == 0
    report = json.loads(output.read_text())
    assert report["mask_bits"] == 6
    assert report["expected_log_likelihood"] < report["log_marginal"]
    assert abs(report["iw_estimate"] - report["log_marginal"]) <= 4.0 * report["iw_standard_error"] + 1e-9
    assert report["lower_bound_estimate"] < report["log_marginal"]


def test_verify_gsm_writes_suite(tmp_path):
    output = tmp_path / "gsm.csv"
    code = main(["verify-gsm", "--draws", "5000", "--output", str(output)])
    suite = pd.read_csv(output)
    assert code == (0 if suite["passed"].all() else 1)
    assert {"check", "family", "seed_passes", "passed"} <= set(suite.columns)


def test_configuration_errors_exit_nonzero(tmp_path):
    run_file = _run_file(tmp_path)
    assert main(["benchmark", str(run_file), "--set", "protocol.splits=0"]) == 2
    assert main(["train", str(tmp_path / "missing.ini")]) == 2
    assert main(["train", str(run_file), "--split", "5"]) == 2
