import json
from pathlib import Path

import pytest

from cli import run
from graphs.experiment_graph import run_experiment
from tools import executor
from utils.csv_storage import load_results_csv


def _written(capsys) -> Path:
    return Path(capsys.readouterr().out.strip().splitlines()[-1])


def _error_record(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def test_simulate_writes_the_law_table(config_file, capsys):
    path = config_file(model={"id": "zero_drift"})
    assert run(["simulate", str(path)]) == 0

    metadata, frame = load_results_csv(_written(capsys))
    assert list(frame.columns) == ["time", "mean", "variance", "w1_to_oracle"]
    assert len(frame) == 17
    assert metadata["subcommand"] == "simulate"
    assert metadata["seed"] == "7"
    assert frame["time"].iloc[-1] == 1.0


def test_rerun_without_timestamp_is_byte_identical(config_file, capsys):
    path = config_file()
    assert run(["simulate", str(path), "--no-timestamp"]) == 0
    first = _written(capsys).read_bytes()
    assert run(["simulate", str(path), "--no-timestamp"]) == 0
    assert _written(capsys).read_bytes() == first


def test_worker_count_does_not_change_the_table(config_file, tmp_path, capsys):
    path = config_file()
    assert run(["simulate", str(path), "--no-timestamp", "--workers", "1", "--output", str(tmp_path / "one")]) == 0
    serial = _written(capsys).read_bytes()
    assert run(["simulate", str(path), "--no-timestamp", "--workers", "4", "--output", str(tmp_path / "four")]) == 0
    assert _written(capsys).read_bytes() == serial


def test_delta_table(config_file, capsys):
    assert run(["delta", str(config_file())]) == 0
    _, frame = load_results_csv(_written(capsys))
    assert list(frame.columns) == ["method", "value", "std_error", "n_samples"]
    assert frame["method"].tolist() == ["bel", "pathwise", "central_fd"]
    assert (frame["n_samples"] == 600).all()


@pytest.mark.parametrize("subcommand, sections, columns, rows", [
    ("picard", {"picard": {"max_iter": 5, "tol": 1e-12}}, ["iteration", "sup_w1"], 5),
    ("ode", {"model": {"id": "expectation_drift", "params": {"form": "linear", "slope": -1.0}}},
     ["time", "mc_mean", "rk4", "gap"], 17),
    ("hoelder", {}, ["pair_id", "lhs", "rhs_bound", "ratio"], 45),
    ("converge", {"converge": {"parameter": "steps", "values": [8, 16, 32, 64]}},
     ["steps", "metric", "value", "std_error"], 4),
    ("lamperti-check", {"model": {"id": "zero_drift"}, "x0": 0.0,
                        "lamperti": {"steps": [32, 64], "w1_tolerance": 1.0}},
     ["steps", "w1_round_trip", "lambda_residual"], 2),
])
def test_table_schemas(config_file, capsys, subcommand, sections, columns, rows):
    assert run([subcommand, str(config_file(**sections))]) == 0
    metadata, frame = load_results_csv(_written(capsys))
    assert list(frame.columns) == columns
    assert len(frame) == rows
    assert metadata["subcommand"] == subcommand


def test_particle_convergence_study(config_file, capsys):
    path = config_file(converge={"parameter": "particles", "values": [100, 400]})
    assert run(["converge", str(path)]) == 0
    _, frame = load_results_csv(_written(capsys))
    assert frame["particles"].tolist() == [100, 400]
    assert (frame["metric"] == "w1_to_oracle").all()
    assert frame["std_error"].isna().all()


def test_smoothed_model_has_no_oracle_column(config_file, capsys):
    path = config_file(model={"id": "smoothed_cdf_drift", "params": {"u": 0.0, "width": 0.2}}, x0=0.0)
    assert run(["simulate", str(path)]) == 0
    _, frame = load_results_csv(_written(capsys))
    assert "w1_to_oracle" not in frame.columns


def test_invalid_config_exits_with_config_error(config_file, capsys):
    path = config_file(particles=1)
    assert run(["simulate", str(path)]) == 2
    record = _error_record(capsys)
    assert record["exit_code"] == 2
    assert record["error"] == "ConfigError"
    assert record["subcommand"] == "simulate"


def test_ode_needs_an_expectation_drift_model(config_file, capsys):
    assert run(["ode", str(config_file())]) == 2
    assert "expectation_drift" in _error_record(capsys)["message"]


def test_failed_check_exits_four_and_keeps_the_table(config_file, tmp_path, capsys):
    path = config_file(model={"id": "zero_drift"}, check={"w1_tolerance": 1e-9})
    assert run(["simulate", str(path), "--check"]) == 4

    captured = capsys.readouterr()
    record = json.loads([line for line in captured.err.splitlines() if line.startswith("{")][-1])
    assert record["error"] == "OracleMismatchError"
    assert [c["name"] for c in record["failed_checks"]] == ["terminal_w1"]
    assert (tmp_path / "results" / "simulate.csv").is_file()


def test_failed_check_is_only_reported_without_the_flag(config_file, capsys):
    path = config_file(model={"id": "zero_drift"}, check={"w1_tolerance": 1e-9})
    assert run(["simulate", str(path)]) == 0


def test_lamperti_check_always_enforces(config_file, capsys):
    path = config_file(model={"id": "zero_drift"}, x0=0.0, lamperti={"steps": [8], "w1_tolerance": 1e-9})
    assert run(["lamperti-check", str(path)]) == 4


def test_workers_must_be_positive(config_file):
    with pytest.raises(SystemExit) as excinfo:
        run(["simulate", str(config_file()), "--workers", "0"])
    assert excinfo.value.code == 2


def test_graph_can_be_driven_directly(config_file):
    state = run_experiment("picard", str(config_file()), timestamp=False)
    assert state["exit_code"] == 0
    assert state["current_step"] == "done"
    assert Path(state["csv_path"]).name == "picard.csv"
    assert state["failed_checks"] == []


@pytest.mark.parametrize("sections, fragment", [
    ({"model": {"id": "smoothed_cdf_drift", "params": {"width": 0.2, "uu": 1.0}}}, "uu"),
    ({"model": {"id": "mean_field_ou", "params": {"a": -1.0}}}, "c"),
    ({"model": {"id": "brownian_bridge"}}, "brownian_bridge"),
    ({"hoelder": {"xs": [0.0, 1.0], "time_points": [0, 17]}}, "0..16"),
    ({"payoff": {"id": "straddle"}}, "straddle"),
    ({"lamperti": {"diffusion": {"id": "cubic"}}}, "cubic"),
    ({"x0": [0.0, 1.0]}, "x0"),
])
def test_bad_components_fail_at_load(config_file, capsys, sections, fragment):
    assert run(["simulate", str(config_file(**sections))]) == 2
    record = _error_record(capsys)
    assert record["error"] == "ConfigError"
    assert fragment in record["message"]


def test_computation_errors_exit_as_numerical_failures(config_file, capsys, monkeypatch):
    def broken(config, workers):
        raise ValueError("estimate must be finite, got nan")

    monkeypatch.setitem(executor.PIPELINES, "delta", broken)
    assert run(["delta", str(config_file())]) == 3
    record = _error_record(capsys)
    assert record["error"] == "NumericalError"
    assert "ValueError" in record["message"]
