import numpy as np
import pytest

from coefficients import make_builtin
from engine import brownian_increments, hoelder_probe, picard_iterate, simulate
from engine.hoelder import default_time_points
from engine.workers import chunk_bounds
from measure import wasserstein1
from models import CoefficientPair, TimeGrid
from utils.errors import CoefficientError, MeasureError, SimulationError


def test_chunk_bounds_cover_the_index_range():
    bounds = chunk_bounds(1000, 4)
    assert bounds[0][0] == 0 and bounds[-1][1] == 1000
    assert all(a[1] == b[0] for a, b in zip(bounds, bounds[1:]))
    assert chunk_bounds(100, 8) == [(0, 100)]


def test_increments_do_not_depend_on_workers_or_population():
    many = brownian_increments(5, 900, 8, 1, 0.125, workers=1)
    np.testing.assert_array_equal(many, brownian_increments(5, 900, 8, 1, 0.125, workers=4))
    np.testing.assert_array_equal(many[:10], brownian_increments(5, 10, 8, 1, 0.125))
    assert many.shape == (900, 8, 1)


def test_zero_drift_paths_are_brownian(zero_pair, unit_grid):
    ens = simulate(zero_pair, unit_grid, 50, 0.5, seed=3)
    expected = 0.5 + np.cumsum(ens.dW[:, :, 0], axis=1)
    np.testing.assert_allclose(ens.states[:, 1:, 0], expected, rtol=0, atol=1e-12)
    assert ens.scheme_tag == "interacting"


def test_simulation_is_bit_reproducible(ou_pair, unit_grid):
    first = simulate(ou_pair, unit_grid, 40, 1.0, seed=9)
    second = simulate(ou_pair, unit_grid, 40, 1.0, seed=9)
    np.testing.assert_array_equal(first.states, second.states)
    assert first.fingerprint == second.fingerprint


def test_worker_count_does_not_change_pairwise_runs(pairwise_pair):
    grid = TimeGrid(T=0.5, steps=8)
    serial = simulate(pairwise_pair, grid, 700, 0.0, seed=4, workers=1)
    parallel = simulate(pairwise_pair, grid, 700, 0.0, seed=4, workers=4)
    np.testing.assert_array_equal(serial.states, parallel.states)
    np.testing.assert_array_equal(serial.rho, parallel.rho)


def test_mean_field_ou_terminal_mean(ou_pair, unit_grid):
    n = 4000
    ens = simulate(ou_pair, unit_grid, n, 1.0, seed=21)
    terminal = ens.terminal[:, 0]
    std_error = terminal.std(ddof=1) / np.sqrt(n)
    assert abs(terminal.mean() - np.exp(-0.5)) <= 3 * std_error + 2 * unit_grid.dt


def test_drift_recomputation_matches_increments(ou_pair, unit_grid):
    ens = simulate(ou_pair, unit_grid, 30, 1.0, seed=2)
    steps = ens.states[:, 1:, :] - ens.states[:, :-1, :]
    np.testing.assert_allclose(steps, ens.drift(ou_pair) * unit_grid.dt + ens.dW, atol=1e-12)


def test_blow_up_is_located():
    explosive = CoefficientPair(name="explosive", b=lambda t, y, z: np.exp(50.0 * y) + 0.0 * z,
                                phi=lambda t, y, z: z + 0.0 * y)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(SimulationError) as excinfo:
            simulate(explosive, TimeGrid(T=1.0, steps=4), 5, 20.0, seed=0)
    assert excinfo.value.step == 1
    assert excinfo.value.particle == 0
    assert excinfo.value.to_record()["exit_code"] == 3


def test_simulate_rejects_bad_inputs(ou_pair, unit_grid):
    with pytest.raises(MeasureError):
        simulate(ou_pair, unit_grid, 1, 0.0, seed=0)
    with pytest.raises(CoefficientError):
        simulate(ou_pair, unit_grid, 10, [0.0, 1.0], seed=0)


def test_picard_contracts_and_reaches_the_interacting_law(ou_pair):
    grid = TimeGrid(T=1.0, steps=32)
    result = picard_iterate(ou_pair, grid, 2000, 1.0, seed=5, max_iter=20, tol=1e-4)
    history = result.history

    assert history[0] > history[1] > history[2]
    assert result.converged
    assert result.ensemble.scheme_tag == "frozen_law"

    interacting = simulate(ou_pair, grid, 2000, 1.0, seed=5)
    gap = wasserstein1(result.ensemble.snapshot(grid.steps), interacting.snapshot(grid.steps))
    assert gap < 0.02


def test_picard_reports_non_convergence(ou_pair):
    result = picard_iterate(ou_pair, TimeGrid(T=1.0, steps=8), 100, 1.0, seed=0, max_iter=1, tol=1e-12)
    assert not result.converged
    assert result.iterations == 1


def test_default_time_points():
    assert default_time_points(TimeGrid(T=1.0, steps=64)) == [0, 16, 32, 48, 64]


def test_hoelder_probe_on_brownian_motion(zero_pair):
    grid = TimeGrid(T=1.0, steps=16)
    n = 4000
    report = hoelder_probe(zero_pair, grid, n, [0.0, 1.0], seed=8)
    # 2 states x 5 times = 10 nodes
    assert len(report.rows) == 45
    assert sum(row.x != row.y and row.t != row.s for row in report.rows) == 20

    for row in report.rows:
        space = (row.x[0] - row.y[0]) ** 2
        if row.t == row.s:
            assert row.lhs == pytest.approx(space, abs=1e-12)
        elif space == 0.0:
            gap = abs(row.t - row.s)
            assert row.lhs == pytest.approx(gap, abs=4 * np.sqrt(2.0 / n) * gap)
    assert np.isfinite(report.constant) and report.constant > 0.0


def test_hoelder_constant_is_stable_across_seeds(ou_pair):
    grid = TimeGrid(T=1.0, steps=16)
    constants = [hoelder_probe(ou_pair, grid, 2000, [0.0, 1.0], seed=s).constant for s in range(5)]
    assert max(constants) <= 1.2 * min(constants)


def test_increments_have_the_brownian_moments():
    n, steps, dt = 2000, 16, 1.0 / 16
    dW = brownian_increments(11, n, steps, 1, dt)
    assert abs(dW.mean()) <= 4 * np.sqrt(dt / dW.size)
    per_step = dW[:, :, 0].var(axis=0, ddof=1)
    assert np.all(np.abs(per_step - dt) <= 4 * dt * np.sqrt(2.0 / n))


def test_supplied_increments_enter_the_fingerprint(zero_pair, unit_grid):
    default = simulate(zero_pair, unit_grid, 20, 0.0, seed=1)
    assert default.fingerprint == simulate(zero_pair, unit_grid, 20, 0.0, seed=1).fingerprint

    own = brownian_increments(2, 20, unit_grid.steps, 1, unit_grid.dt)
    first = simulate(zero_pair, unit_grid, 20, 0.0, seed=1, dW=own)
    second = simulate(zero_pair, unit_grid, 20, 0.0, seed=1, dW=2.0 * own)
    assert first.fingerprint != second.fingerprint
    assert first.fingerprint != default.fingerprint
    assert first.fingerprint == simulate(zero_pair, unit_grid, 20, 0.0, seed=1, dW=own.copy()).fingerprint


def test_supplied_increments_must_match_the_run(zero_pair, unit_grid):
    with pytest.raises(SimulationError, match="increments have shape"):
        simulate(zero_pair, unit_grid, 20, 0.0, seed=1, dW=np.zeros((20, unit_grid.steps - 1, 1)))


def test_picard_without_drift_settles_in_one_iteration(zero_pair):
    result = picard_iterate(zero_pair, TimeGrid(T=1.0, steps=16), 500, 0.0, seed=3, max_iter=5, tol=1e-9)
    assert result.converged
    assert result.iterations == 1
    assert result.history[0] <= 1e-12


def test_picard_on_cdf_drift_reaches_the_interacting_law():
    pair = make_builtin("cdf_drift", {"u": 0.0})
    grid = TimeGrid(T=1.0, steps=8)
    result = picard_iterate(pair, grid, 1000, 0.0, seed=6, max_iter=40, tol=1e-9)
    # iteration j reproduces the interacting law up to time index j
    assert result.converged
    assert result.iterations <= grid.steps + 2

    interacting = simulate(pair, grid, 1000, 0.0, seed=6)
    assert wasserstein1(result.ensemble.snapshot(grid.steps), interacting.snapshot(grid.steps)) <= 1e-3
