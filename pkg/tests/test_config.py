from pathlib import Path

import pandas as pd
import pytest
from pydantic import ValidationError

from config.settings import get_settings
from graphs.nodes.experiment_nodes import load_config
from graphs.state import create_initial_state, validate_state
from models.coefficients import MollifierConfig
from models.experiment import ExperimentConfig, FiniteDifferenceSection, MollifySection, OdeSection, PayoffSection
from sensitivity.payoffs import make_payoff
from utils.csv_storage import load_results_csv, resolve_output_dir, save_results_csv
from utils.errors import ConfigError

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def baseline():
    return load_config(str(FIXTURES / "experiment_ou.yaml")).model_dump()


def test_fixture_config_parses():
    config = load_config(str(FIXTURES / "experiment_ou.yaml"))
    assert config.model.id == "mean_field_ou"
    assert config.grid.steps == 32
    assert config.x0_value == 1.0
    assert config.estimators == ["bel", "pathwise", "central_fd"]
    assert config.converge.values == [8, 16, 32, 64]
    assert config.mollify is None


@pytest.mark.parametrize("override", [
    {"particles": 1},
    {"surprise": True},
    {"converge": {"parameter": "steps", "values": [16, 8]}},
    {"estimators": ["bel", "bel"]},
    {"grid": {"T": 0.0, "steps": 4}},
    {"weight_schedule": "cubic"},
])
def test_invalid_configs_are_rejected(baseline, override):
    with pytest.raises(ValidationError):
        ExperimentConfig(**{**baseline, **override})


def test_digest_tracks_content(baseline):
    first = ExperimentConfig(**baseline)
    assert first.digest() == ExperimentConfig(**baseline).digest()
    assert first.digest() != ExperimentConfig(**{**baseline, "seed": 12}).digest()
    assert len(first.digest()) == 64


def test_vector_initial_state_must_be_scalar_for_experiments(baseline):
    assert ExperimentConfig(**{**baseline, "x0": [2.5]}).x0_value == 2.5
    with pytest.raises(ValidationError, match="one-element"):
        ExperimentConfig(**{**baseline, "x0": [1.0, 2.0]})


@pytest.mark.parametrize("model", [
    {"id": "smoothed_cdf_drift", "params": {"width": 0.2, "uu": 1.0}},
    {"id": "custom_table", "params": {"knots": [0.0, 1.0], "values": [1.0]}},
    {"id": "cdf_drift", "params": {"u": float("nan")}},
    {"id": "unknown_model"},
])
def test_model_parameters_are_checked_at_load(baseline, model):
    with pytest.raises(ValidationError):
        ExperimentConfig(**{**baseline, "model": model})


def test_load_config_failures(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "missing.yaml"))

    broken = tmp_path / "broken.yaml"
    broken.write_text("model: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(broken))

    scalar = tmp_path / "scalar.yaml"
    scalar.write_text("42\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(str(scalar))


def test_dev_settings():
    settings = get_settings()
    assert settings.environment == "dev"
    assert settings.runtime.log_level == "DEBUG"
    assert settings.numerics.bel_epsilon == 0.5
    assert settings.output_dir is None


def test_output_directory_priority(monkeypatch, tmp_path):
    assert resolve_output_dir("from_config") == Path("from_config")
    monkeypatch.setenv("MFSDE_OUTPUT_DIR", str(tmp_path / "env"))
    get_settings.cache_clear()
    assert get_settings().output_dir == tmp_path / "env"
    assert resolve_output_dir("from_config") == tmp_path / "env"
    assert resolve_output_dir("from_config", str(tmp_path / "cli")) == tmp_path / "cli"


def test_numerical_settings_feed_the_defaults(monkeypatch):
    monkeypatch.setenv("MFSDE_ENVIRONMENT", "prod")
    monkeypatch.setenv("MFSDE_NUMERICS__FD_STEP", "0.01")
    monkeypatch.setenv("MFSDE_NUMERICS__BEL_EPSILON", "0.25")
    monkeypatch.setenv("MFSDE_NUMERICS__RK4_STEPS", "2000")
    get_settings.cache_clear()

    assert get_settings().runtime.workers == 4
    assert MollifySection(bandwidth=0.1).quadrature_order == 16
    assert MollifierConfig(bandwidth=0.1).quadrature_order == 16
    assert FiniteDifferenceSection().h == 0.01
    assert PayoffSection().epsilon == 0.25
    assert make_payoff("identity").epsilon == 0.25
    assert OdeSection().rk4_steps == 2000


def test_csv_metadata_and_float_text(tmp_path):
    frame = pd.DataFrame({"time": [0.0, 0.5], "value": [0.1 + 0.2, 1.0 / 3.0]})
    path = save_results_csv(frame, tmp_path, "simulate", "abc123", 7, timestamp=False)

    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == "# config_digest=abc123 seed=7 subcommand=simulate"
    assert "0.30000000000000004" in text
    assert "generated=" not in text

    metadata, loaded = load_results_csv(path)
    assert metadata == {"config_digest": "abc123", "seed": "7", "subcommand": "simulate"}
    assert list(loaded.columns) == ["time", "value"]
    assert len(loaded) == 2


def test_csv_timestamp_line(tmp_path):
    path = save_results_csv(pd.DataFrame({"a": [1]}), tmp_path, "picard", "d", 0)
    metadata, _ = load_results_csv(path)
    assert metadata["generated"].endswith("Z")


def test_initial_state_validation():
    state = create_initial_state("delta", "experiment.yaml", workers=2, check=True)
    assert validate_state(state) == (True, None)
    assert state["options"] == {"workers": 2, "check": True, "timestamp": True, "output": None}

    ok, message = validate_state({**state, "subcommand": "plot"})
    assert not ok
    assert "Invalid subcommand" in message
