import ast
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from coefficients import make_builtin
from engine import simulate
from measure import wasserstein1_to_gaussian
from models import TimeGrid
from oracles import caratheodory_solve, cdf_drift_fixture, cdf_drift_oracle, cdf_drift_rate, ou_oracle, rk4_on_nodes
from utils.errors import OracleError

ORACLES = Path(__file__).resolve().parents[1] / "oracles"


def test_ou_oracle_closed_form(oracle_fixtures):
    ref = oracle_fixtures["mean_field_ou"]
    grid = TimeGrid(T=ref["T"], steps=10)
    oracle = ou_oracle(ref["a"], ref["c"], ref["x0"], grid)
    assert oracle.mean[-1] == pytest.approx(ref["terminal_mean"], rel=1e-14)
    assert oracle.variance[-1] == pytest.approx((1.0 - math.exp(-2.0)) / 2.0, rel=1e-14)
    np.testing.assert_allclose(oracle.tangent, oracle.mean)
    np.testing.assert_allclose(ou_oracle(0.0, 0.0, 2.0, grid).variance, grid.times)


def test_rk4_on_exponential_growth():
    nodes = np.linspace(0.0, 1.0, 5)
    values = rk4_on_nodes(lambda x, y: y, 1.0, nodes, substeps=250)
    np.testing.assert_allclose(values, np.exp(nodes), rtol=1e-12)


def test_rk4_reports_blow_up():
    with pytest.raises(OracleError):
        rk4_on_nodes(lambda x, y: math.inf, 0.0, np.array([0.0, 1.0]), substeps=4)


def test_cdf_drift_rate_sign_convention():
    assert cdf_drift_rate(0.0, 0.0, 1.0, 0.0) == 1.0
    assert cdf_drift_rate(0.0, 0.0, -1.0, 0.0) == 0.0
    assert cdf_drift_rate(0.0, 0.0, 0.0, 0.0) == 0.5
    assert cdf_drift_rate(1.0, 0.0, 0.0, 0.0) == pytest.approx(0.5)


def test_cdf_drift_fixture_matches_the_stored_value(oracle_fixtures):
    ref = oracle_fixtures["cdf_drift"]
    fixture = cdf_drift_fixture(ref["u"], ref["x0"], ref["T"], steps=ref["rk4_steps"])
    low, high = ref["A_T_bracket"]
    assert low <= ref["A_T"] <= high
    assert fixture["A_T"] == pytest.approx(ref["A_T"], abs=ref["value_tolerance"])
    assert fixture["richardson_gap"] <= ref["richardson_tolerance"]
    assert ref["richardson_gap"] <= ref["richardson_tolerance"]
    assert fixture["rk4_steps"] == ref["rk4_steps"]


def test_cdf_drift_fixture_rejects_an_unsettled_integration():
    with pytest.raises(OracleError, match="did not settle"):
        cdf_drift_fixture(0.0, 0.0, 1.0, steps=2, tolerance=0.0)


def test_cdf_drift_oracle_agrees_with_fixture(oracle_fixtures):
    ref = oracle_fixtures["cdf_drift"]
    grid = TimeGrid(T=ref["T"], steps=100)
    oracle = cdf_drift_oracle(ref["u"], ref["x0"], grid, steps=ref["rk4_steps"])
    assert oracle.mean[-1] == pytest.approx(ref["A_T"], abs=1e-8)
    np.testing.assert_array_equal(oracle.variance, grid.times)
    assert np.all(np.diff(oracle.mean) > 0.0)
    # A'(0+) = 1/2
    assert 0.48 <= oracle.mean[1] / grid.times[1] <= 0.5


@pytest.fixture(scope="module")
def cdf_terminal():
    grid = TimeGrid(T=1.0, steps=128)
    ens = simulate(make_builtin("cdf_drift", {"u": 0.0}), grid, 10_000, 0.0, seed=42)
    return grid, ens.states[:, grid.steps, 0]


def test_cdf_drift_terminal_mean_tracks_the_ode(oracle_fixtures, cdf_terminal):
    grid, terminal = cdf_terminal
    n = terminal.size
    assert terminal.mean() == pytest.approx(oracle_fixtures["cdf_drift"]["A_T"], abs=4.0 / math.sqrt(n) + 2.0 * grid.dt)
    assert terminal.var() == pytest.approx(1.0, abs=0.05)


def test_cdf_drift_terminal_law_is_gaussian(cdf_terminal):
    _, terminal = cdf_terminal
    n = terminal.size
    studentized = (terminal - terminal.mean()) / terminal.std()
    assert abs(stats.skew(studentized)) <= 3.0 * math.sqrt(6.0 / n)
    assert abs(stats.kurtosis(studentized)) <= 3.0 * math.sqrt(24.0 / n)



def test_cdf_drift_particles_approach_the_gaussian_reduction():
    pair = make_builtin("cdf_drift", {"u": 0.0})
    grid = TimeGrid(T=1.0, steps=128)
    oracle = cdf_drift_oracle(0.0, 0.0, grid)
    distances = []
    for n in (100, 1000, 10_000):
        ens = simulate(pair, grid, n, 0.0, seed=42)
        distances.append(wasserstein1_to_gaussian(ens.snapshot(grid.steps), oracle.mean[-1], oracle.std[-1]))
    assert distances[-1] <= 0.03
    assert distances[0] > distances[1] > distances[2]


def test_caratheodory_bridge():
    grid = TimeGrid(T=1.0, steps=50)
    n = 4000
    result = caratheodory_solve(lambda t, m: -m, 1.0, grid, n, seed=3, rk4_steps=2000)
    np.testing.assert_allclose(result.rk4_curve, np.exp(-grid.times), rtol=1e-10)
    assert result.max_abs_gap <= 3 * math.sqrt(grid.T / n) + 2 * grid.dt


@pytest.mark.parametrize("module", ["ou.py", "cdf_drift.py", "rk4.py"])
def test_closed_form_oracles_do_not_import_the_engine(module):
    tree = ast.parse((ORACLES / module).read_text(encoding="utf-8"))
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            imported.update(alias.name.split(".")[0] for alias in node.names)
        elif isinstance(node, ast.ImportFrom) and node.module:
            imported.add(node.module.split(".")[0])
    assert "engine" not in imported
