from pathlib import Path

import numpy as np
import pytest
import yaml

from coefficients import make_builtin
from config.settings import get_settings
from models import CoefficientPair, RegularityFlags, TimeGrid

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    monkeypatch.delenv("MFSDE_OUTPUT_DIR", raising=False)
    monkeypatch.setenv("MFSDE_ENVIRONMENT", "dev")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def oracle_fixtures():
    with open(FIXTURES / "oracle_fixtures.yaml", encoding="utf-8") as f:
        return yaml.safe_load(f)


@pytest.fixture
def ou_pair():
    return make_builtin("mean_field_ou", {"a": -1.0, "c": 0.5})


@pytest.fixture
def zero_pair():
    return make_builtin("zero_drift")


@pytest.fixture
def unit_grid():
    return TimeGrid(T=1.0, steps=64)


@pytest.fixture
def pairwise_pair():
    """b = ρ, φ = tanh(z − y): the law integral depends on the evaluating particle."""
    return CoefficientPair(
        name="tanh_gap",
        b=lambda t, y, z: np.broadcast_to(z, np.broadcast_shapes(np.shape(y), np.shape(z))).astype(float),
        phi=lambda t, y, z: np.tanh(z - y),
        growth_constant=1.0,
        flags=RegularityFlags(lipschitz_z_b=True, lipschitz_z_phi=True, lipschitz_y_phi=True),
    )


def write_config(directory: Path, name: str = "experiment.yaml", **sections) -> Path:
    """Dump an experiment config; `sections` override the mean-field OU baseline."""
    config = {
        "model": {"id": "mean_field_ou", "params": {"a": -1.0, "c": 0.5}},
        "grid": {"T": 1.0, "steps": 16},
        "particles": 600,
        "x0": 1.0,
        "seed": 7,
        "output": str(directory / "results"),
    }
    config.update(sections)
    path = directory / name
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config, f, sort_keys=False)
    return path


@pytest.fixture
def config_file(tmp_path):
    def make(**sections) -> Path:
        return write_config(tmp_path, **sections)
    return make
