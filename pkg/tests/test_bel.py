import math

import numpy as np
import pytest

from coefficients import make_builtin
from engine import simulate
from models import TimeGrid
from sensitivity import (
    delta_bel,
    delta_fd,
    delta_pathwise,
    make_payoff,
    make_weight_schedule,
    propagate_tangent,
    validate_payoff,
)
from utils.errors import PayoffError, SensitivityError


@pytest.fixture
def ou_run(ou_pair):
    grid = TimeGrid(T=1.0, steps=64)
    ens = simulate(ou_pair, grid, 5000, 1.0, seed=12)
    return ens, propagate_tangent(ens, ou_pair)


def test_constant_payoff_norm_is_gaussian_integral():
    report = validate_payoff(make_payoff("constant", {"value": 1.0}), T=1.0)
    assert report.finite
    assert report.value == pytest.approx(math.sqrt(4.0 * math.pi), rel=1e-8)


@pytest.mark.parametrize("payoff_id, params", [
    ("identity", {}),
    ("call", {"strike": 0.5}),
    ("smoothed_call", {"strike": 0.0, "width": 0.1}),
    ("digital", {"strike": 0.0}),
    ("power", {"degree": 3.5}),
])
def test_polynomially_bounded_payoffs_are_admissible(payoff_id, params):
    assert validate_payoff(make_payoff(payoff_id, params), T=1.0).finite


def test_gaussian_growth_payoff_is_rejected():
    report = validate_payoff(make_payoff("exp_square", {"rate": 1.0}), T=1.0)
    assert not report.finite
    assert report.detail


def test_high_degree_polynomial_payoff_is_admissible():
    report = validate_payoff(make_payoff("power", {"degree": 100}, epsilon=0.5), T=1.0)
    assert report.finite
    # ∫|y|^600 e^{−y²/4} dy = 2^601·Γ(300.5)
    assert report.log_value == pytest.approx(601 * math.log(2.0) + math.lgamma(300.5), abs=1e-5)
    assert report.detail == "adaptive quadrature over the decay window"


@pytest.mark.parametrize("rate, finite", [(0.02, True), (0.05, False)])
def test_gaussian_growth_is_weighed_against_the_horizon(rate, finite):
    # 2p·rate against 1/4T with 2p = 6
    assert validate_payoff(make_payoff("exp_square", {"rate": rate}, epsilon=0.5), T=1.0).finite is finite


def test_validate_payoff_needs_enough_nodes():
    with pytest.raises(PayoffError):
        validate_payoff(make_payoff("identity"), T=1.0, quad_points=16)


def test_three_estimators_agree_on_mean_field_ou(ou_pair, ou_run):
    ens, tang = ou_run
    payoff = make_payoff("identity")
    schedule = make_weight_schedule("uniform", ens.grid)

    bel = delta_bel(ens, tang, ou_pair, payoff, schedule)
    pathwise = delta_pathwise(ens, tang, payoff)
    fd = delta_fd(ou_pair, ens.grid, 5000, 1.0, 1e-3, 12, payoff)

    allowance = 2 * ens.grid.dt
    assert bel.agrees_with(pathwise, n_sigma=3, allowance=allowance)
    assert bel.agrees_with(fd, n_sigma=3, allowance=allowance)
    assert fd.value == pytest.approx(pathwise.value, rel=1e-6)
    assert pathwise.value == pytest.approx(math.exp(-0.5), rel=0.01)
    assert [e.method for e in (bel, pathwise, fd)] == ["bel", "pathwise", "central_fd"]
    assert not fd.notes


def test_brownian_argument_matches_solution_for_y_independent_law(ou_pair, ou_run):
    ens, tang = ou_run
    payoff = make_payoff("identity")
    schedule = make_weight_schedule("uniform", ens.grid)
    solution = delta_bel(ens, tang, ou_pair, payoff, schedule)
    brownian = delta_bel(ens, tang, ou_pair, payoff, schedule, mean_field_argument="brownian")
    assert brownian.value == pytest.approx(solution.value, rel=1e-12)
    assert brownian.notes == ["mean_field_argument=brownian"]


def test_weight_schedule_does_not_change_the_estimate():
    pair = make_builtin("smoothed_cdf_drift", {"u": 0.0, "width": 0.2})
    grid = TimeGrid(T=1.0, steps=32)
    ens = simulate(pair, grid, 4000, 0.0, seed=31)
    tang = propagate_tangent(ens, pair)
    payoff = make_payoff("smoothed_call", {"strike": 0.0, "width": 0.1})

    uniform = delta_bel(ens, tang, pair, payoff, make_weight_schedule("uniform", grid))
    linear = delta_bel(ens, tang, pair, payoff, make_weight_schedule("linear", grid))
    assert uniform.agrees_with(linear, n_sigma=3, allowance=2 * grid.dt)


def test_bel_refuses_inadmissible_payoff(ou_pair, ou_run):
    ens, tang = ou_run
    with pytest.raises(PayoffError):
        delta_bel(ens, tang, ou_pair, make_payoff("exp_square", {"rate": 1.0}),
                  make_weight_schedule("uniform", ens.grid))


def test_bel_refuses_schedule_on_another_grid(ou_pair, ou_run):
    ens, tang = ou_run
    with pytest.raises(SensitivityError):
        delta_bel(ens, tang, ou_pair, make_payoff("identity"),
                  make_weight_schedule("uniform", TimeGrid(T=1.0, steps=32)))


def test_pathwise_needs_a_payoff_derivative(ou_run):
    ens, tang = ou_run
    with pytest.raises(PayoffError):
        delta_pathwise(ens, tang, make_payoff("digital"))


def test_finite_difference_step_must_be_positive(ou_pair, unit_grid):
    with pytest.raises(SensitivityError):
        delta_fd(ou_pair, unit_grid, 10, 1.0, 0.0, 0, make_payoff("identity"))


def test_weight_schedules_integrate_to_one():
    grid = TimeGrid(T=2.0, steps=10)
    linear = make_weight_schedule("linear", grid)
    np.testing.assert_allclose(linear.cumulative, (grid.times[1:] / grid.T) ** 2, atol=1e-12)
    assert linear.cumulative[0] == pytest.approx(linear.cell_values[0] * grid.dt, abs=1e-15)
    assert linear.cumulative[-1] == pytest.approx(1.0, abs=1e-12)
    uniform = make_weight_schedule("uniform", grid)
    np.testing.assert_allclose(uniform.cell_values, 0.5)
    with pytest.raises(PayoffError):
        make_weight_schedule("cubic", grid)
    with pytest.raises(PayoffError):
        make_payoff("straddle")


@pytest.mark.slow
def test_desk_scale_estimators_agree(ou_pair):
    grid = TimeGrid(T=1.0, steps=512)
    n = 100_000
    ens = simulate(ou_pair, grid, n, 1.0, seed=2024)
    tang = propagate_tangent(ens, ou_pair)
    payoff = make_payoff("identity")

    terminal = ens.terminal[:, 0]
    assert abs(terminal.mean() - math.exp(-0.5)) <= 3 * terminal.std(ddof=1) / math.sqrt(n) + 2 * grid.dt
    np.testing.assert_allclose(tang.terminal, math.exp(-0.5), rtol=0.02)

    estimates = [
        delta_bel(ens, tang, ou_pair, payoff, make_weight_schedule("uniform", grid)),
        delta_pathwise(ens, tang, payoff),
        delta_fd(ou_pair, grid, n, 1.0, 1e-3, 2024, payoff),
    ]
    for i, first in enumerate(estimates):
        for second in estimates[i + 1:]:
            assert first.agrees_with(second, n_sigma=3, allowance=2 * grid.dt)


@pytest.mark.slow
def test_desk_scale_weight_schedule_invariance():
    pair = make_builtin("smoothed_cdf_drift", {"u": 0.0, "width": 0.2})
    grid = TimeGrid(T=1.0, steps=128)
    ens = simulate(pair, grid, 100_000, 0.0, seed=77)
    tang = propagate_tangent(ens, pair)
    payoff = make_payoff("smoothed_call", {"strike": 0.0, "width": 0.1})
    uniform = delta_bel(ens, tang, pair, payoff, make_weight_schedule("uniform", grid))
    linear = delta_bel(ens, tang, pair, payoff, make_weight_schedule("linear", grid))
    assert uniform.agrees_with(linear, n_sigma=3)
