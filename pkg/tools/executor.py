"""Subcommand pipelines of the experiment runner.

Each handler turns a validated ExperimentConfig into a result table and a
list of tolerance checks; the graph decides whether the checks are enforced.
"""

import logging
from itertools import combinations
from typing import Any, Callable, Dict, List, Optional
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from coefficients.builtins import make_builtin, mean_drift
from coefficients.mollifier import mollify
from engine.hoelder import hoelder_probe
from engine.picard import picard_iterate
from engine.simulate import simulate
from lamperti.direct import round_trip
from lamperti.transform import make_diffusion
from measure.empirical import moments, wasserstein1_to_gaussian
from models.coefficients import CoefficientPair, MollifierConfig
from models.ensemble import TimeGrid
from models.experiment import ExperimentConfig
from models.oracle import OracleSolution
from oracles.caratheodory import caratheodory_solve
from oracles.cdf_drift import cdf_drift_oracle
from oracles.ou import ou_oracle
from sensitivity.bel import delta_bel, delta_fd, delta_pathwise
from sensitivity.payoffs import make_payoff, make_weight_schedule
from sensitivity.tangent import propagate_tangent
from utils.errors import ConfigError, MFSDEError, NumericalError

logger = logging.getLogger(__name__)


class PipelineError(MFSDEError):
    exit_code = 2


class CheckOutcome(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class PipelineOutput(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    frame: pd.DataFrame
    checks: List[CheckOutcome] = Field(default_factory=list)
    always_check: bool = False


def build_pair(config: ExperimentConfig) -> CoefficientPair:
    pair = make_builtin(config.model.id, config.model.params)
    if config.mollify is not None:
        pair = mollify(pair, MollifierConfig(**config.mollify.model_dump()))
    return pair


def build_grid(config: ExperimentConfig, steps: Optional[int] = None) -> TimeGrid:
    return TimeGrid(T=config.grid.T, steps=steps or config.grid.steps)


def oracle_for(config: ExperimentConfig, grid: TimeGrid) -> Optional[OracleSolution]:
    """Gaussian reference law when the unmollified model has one."""
    if config.mollify is not None:
        return None
    x0, params = config.x0_value, config.model.params
    if config.model.id == "zero_drift":
        return ou_oracle(0.0, 0.0, x0, grid)
    if config.model.id == "mean_field_ou":
        return ou_oracle(float(params["a"]), float(params["c"]), x0, grid)
    if config.model.id == "cdf_drift":
        return cdf_drift_oracle(float(params.get("u", 0.0)), x0, grid)
    return None


def _simulate(config: ExperimentConfig, workers: int) -> PipelineOutput:
    pair, grid = build_pair(config), build_grid(config)
    ensemble = simulate(pair, grid, config.particles, config.x0_value, config.seed, workers=workers)
    oracle = oracle_for(config, grid)
    rows = []
    for k, t in enumerate(grid.times):
        snapshot = ensemble.snapshot(k)
        row = {"time": float(t),
               "mean": float(moments(snapshot, 1)[0]),
               "variance": float(moments(snapshot, 2)[0, 0])}
        if oracle is not None:
            row["w1_to_oracle"] = wasserstein1_to_gaussian(snapshot, float(oracle.mean[k]), float(oracle.std[k]))
        rows.append(row)
    frame = pd.DataFrame(rows)

    checks = []
    if oracle is not None:
        terminal = float(frame["w1_to_oracle"].iloc[-1])
        checks.append(CheckOutcome(name="terminal_w1", passed=terminal <= config.check.w1_tolerance,
                                   detail=f"W1 {terminal!r} vs tolerance {config.check.w1_tolerance!r}"))
    return PipelineOutput(frame=frame, checks=checks)


def _delta(config: ExperimentConfig, workers: int) -> PipelineOutput:
    pair, grid = build_pair(config), build_grid(config)
    x0 = config.x0_value
    payoff = make_payoff(config.payoff.id, config.payoff.params, config.payoff.epsilon)
    digest = config.digest()

    ensemble = tangent = None
    if {"bel", "pathwise"} & set(config.estimators):
        ensemble = simulate(pair, grid, config.particles, x0, config.seed, workers=workers)
        tangent = propagate_tangent(ensemble, pair, workers=workers)

    estimates = []
    for method in config.estimators:
        if method == "bel":
            schedule = make_weight_schedule(config.weight_schedule, grid)
            estimates.append(delta_bel(ensemble, tangent, pair, payoff, schedule,
                                       mean_field_argument=config.bel.mean_field_argument,
                                       workers=workers, config_digest=digest))
        elif method == "pathwise":
            estimates.append(delta_pathwise(ensemble, tangent, payoff, config_digest=digest))
        else:
            estimates.append(delta_fd(pair, grid, config.particles, x0, config.fd.h, config.seed, payoff,
                                      workers=workers, config_digest=digest))

    frame = pd.DataFrame([{"method": e.method, "value": e.value, "std_error": e.std_error,
                           "n_samples": e.n_samples} for e in estimates])
    allowance = config.check.bias_steps * grid.dt + config.fd.h ** 2
    checks = [
        CheckOutcome(name=f"{a.method}~{b.method}",
                     passed=a.agrees_with(b, n_sigma=config.check.n_sigma, allowance=allowance),
                     detail=f"{a.value!r} vs {b.value!r}")
        for a, b in combinations(estimates, 2)
    ]
    return PipelineOutput(frame=frame, checks=checks)


def _picard(config: ExperimentConfig, workers: int) -> PipelineOutput:
    pair, grid = build_pair(config), build_grid(config)
    result = picard_iterate(pair, grid, config.particles, config.x0_value, config.seed,
                            max_iter=config.picard.max_iter, tol=config.picard.tol, workers=workers)
    frame = pd.DataFrame({"iteration": np.arange(1, result.iterations + 1), "sup_w1": result.history})
    checks = [CheckOutcome(name="picard_converged", passed=result.converged,
                           detail=f"{result.iterations} iterations, last sup W1 {result.history[-1]!r}")]
    return PipelineOutput(frame=frame, checks=checks)


def _ode(config: ExperimentConfig, workers: int) -> PipelineOutput:
    if config.model.id != "expectation_drift":
        raise ConfigError("the ode subcommand needs model id 'expectation_drift'")
    grid = build_grid(config)
    b_mean, db_mean, _ = mean_drift(config.model.params)
    result = caratheodory_solve(b_mean, config.x0_value, grid, config.particles, config.seed,
                                db_mean=db_mean, workers=workers, rk4_steps=config.ode.rk4_steps)
    frame = pd.DataFrame({"time": grid.times, "mc_mean": result.mc_curve, "rk4": result.rk4_curve,
                          "gap": np.abs(result.mc_curve - result.rk4_curve)})
    bound = config.check.n_sigma * np.sqrt(grid.T / config.particles) + config.check.bias_steps * grid.dt
    checks = [CheckOutcome(name="caratheodory_gap", passed=result.max_abs_gap <= bound,
                           detail=f"max gap {result.max_abs_gap!r} vs bound {bound!r}")]
    return PipelineOutput(frame=frame, checks=checks)


def _hoelder(config: ExperimentConfig, workers: int) -> PipelineOutput:
    pair, grid = build_pair(config), build_grid(config)
    report = hoelder_probe(pair, grid, config.particles, config.hoelder.xs, config.seed,
                           time_points=config.hoelder.time_points, workers=workers)
    frame = pd.DataFrame([{
        "pair_id": row.pair_id,
        "lhs": row.lhs,
        "rhs_bound": report.constant * row.rhs_unit,
        "ratio": row.ratio if row.ratio is not None else float("nan"),
    } for row in report.rows])
    return PipelineOutput(frame=frame)


def _lamperti_check(config: ExperimentConfig, workers: int) -> PipelineOutput:
    pair = build_pair(config)
    spec = make_diffusion(config.lamperti.diffusion.id, config.lamperti.diffusion.params)
    section = config.lamperti
    rows = [round_trip(pair, spec, build_grid(config, steps), config.particles, config.x0_value,
                       config.seed, anchor=section.anchor, workers=workers)
            for steps in section.steps]
    frame = pd.DataFrame([{k: r[k] for k in ("steps", "w1_round_trip", "lambda_residual")} for r in rows])

    checks = []
    for r in rows:
        checks.append(CheckOutcome(name=f"w1_round_trip@{r['steps']}",
                                   passed=r["w1_round_trip"] <= section.w1_tolerance,
                                   detail=f"{r['w1_round_trip']!r} vs {section.w1_tolerance!r}"))
        checks.append(CheckOutcome(name=f"lambda_residual@{r['steps']}",
                                   passed=r["lambda_residual"] <= section.residual_tolerance,
                                   detail=f"{r['lambda_residual']!r} vs {section.residual_tolerance!r}"))
    return PipelineOutput(frame=frame, checks=checks, always_check=True)


def _converge(config: ExperimentConfig, workers: int) -> PipelineOutput:
    pair = build_pair(config)
    parameter, values = config.converge.parameter, config.converge.values
    rows = []
    for value in values:
        steps = value if parameter == "steps" else None
        particles = value if parameter == "particles" else config.particles
        grid = build_grid(config, steps)
        oracle = oracle_for(config, grid)
        if oracle is None:
            raise ConfigError(f"model '{config.model.id}' has no oracle for the converge study")
        ensemble = simulate(pair, grid, particles, config.x0_value, config.seed, workers=workers)
        terminal = ensemble.terminal[:, 0]
        if parameter == "steps":
            rows.append({"steps": value, "metric": "abs_bias",
                         "value": abs(float(terminal.mean()) - float(oracle.mean[-1])),
                         "std_error": float(terminal.std(ddof=1) / np.sqrt(particles))})
        else:
            rows.append({"particles": value, "metric": "w1_to_oracle",
                         "value": wasserstein1_to_gaussian(ensemble.snapshot(grid.steps),
                                                           float(oracle.mean[-1]), float(oracle.std[-1])),
                         "std_error": float("nan")})
    frame = pd.DataFrame(rows)

    checks = []
    for previous, current in zip(rows[:-1], rows[1:]):
        slack = 0.0
        if parameter == "steps":
            slack = config.check.n_sigma * float(np.hypot(previous["std_error"], current["std_error"]))
        checks.append(CheckOutcome(
            name=f"monotone@{current[parameter]}",
            passed=current["value"] <= previous["value"] + slack,
            detail=f"{current['value']!r} after {previous['value']!r} (slack {slack!r})",
        ))
    return PipelineOutput(frame=frame, checks=checks)


PIPELINES: Dict[str, Callable[[ExperimentConfig, int], PipelineOutput]] = {
    "simulate": _simulate,
    "delta": _delta,
    "picard": _picard,
    "ode": _ode,
    "hoelder": _hoelder,
    "lamperti-check": _lamperti_check,
    "converge": _converge,
}


def execute_pipeline(subcommand: str, config: ExperimentConfig, workers: int = 1) -> Dict[str, Any]:
    handler = PIPELINES.get(subcommand)
    if not handler:
        raise PipelineError(f"Unknown subcommand: {subcommand}. Must be one of {sorted(PIPELINES)}")

    try:
        return {"success": True, "result": handler(config, workers)}
    except MFSDEError as e:
        logger.error("%s pipeline failed: %s", subcommand, e)
        return {"success": False, "error": e}
    except (ArithmeticError, KeyError, TypeError, ValueError) as e:
        logger.error("%s pipeline failed during computation: %s: %s", subcommand, type(e).__name__, e)
        error = NumericalError(f"{type(e).__name__}: {e}")
        error.__cause__ = e
        return {"success": False, "error": error}

