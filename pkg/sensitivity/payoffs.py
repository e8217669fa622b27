"""Built-in payoffs Φ and weight schedules a(s) for the delta estimators."""

import logging
from typing import Any, Callable, Dict, Optional
import numpy as np
from scipy.integrate import quad
from scipy.special import expit

from config.settings import get_settings
from models.ensemble import TimeGrid
from models.sensitivity import Payoff, WeightSchedule
from utils.errors import PayoffError

logger = logging.getLogger(__name__)


def _param(params: Dict[str, Any], key: str, default: Optional[float] = None) -> float:
    if key not in params:
        if default is None:
            raise PayoffError(f"missing required payoff parameter '{key}'")
        return float(default)
    try:
        return float(params[key])
    except (TypeError, ValueError):
        raise PayoffError(f"payoff parameter '{key}' must be a number, got {params[key]!r}")


def _identity(params, epsilon):
    return Payoff(name="identity", Phi=lambda y: np.asarray(y, dtype=float),
                  dPhi=lambda y: np.ones(np.shape(y)), lipschitz=True, epsilon=epsilon)


def _square(params, epsilon):
    return Payoff(name="square", Phi=lambda y: np.asarray(y, dtype=float) ** 2,
                  dPhi=lambda y: 2.0 * np.asarray(y, dtype=float), epsilon=epsilon)


def _power(params, epsilon):
    degree = _param(params, "degree", 2.0)
    if degree < 0.0:
        raise PayoffError(f"power payoff degree must be nonnegative, got {degree}")
    return Payoff(
        name="power",
        Phi=lambda y: np.abs(np.asarray(y, dtype=float)) ** degree,
        dPhi=(lambda y: degree * np.sign(y) * np.abs(np.asarray(y, dtype=float)) ** (degree - 1.0))
        if degree >= 1.0 else None,
        lipschitz=degree == 1.0, bounded=degree == 0.0, epsilon=epsilon,
    )


def _constant(params, epsilon):
    value = _param(params, "value", 1.0)
    return Payoff(name="constant", Phi=lambda y: np.full(np.shape(y), value),
                  dPhi=lambda y: np.zeros(np.shape(y)), lipschitz=True, bounded=True, epsilon=epsilon)


def _call(params, epsilon):
    strike = _param(params, "strike", 0.0)
    return Payoff(name="call", Phi=lambda y: np.maximum(np.asarray(y, dtype=float) - strike, 0.0),
                  dPhi=lambda y: (np.asarray(y) > strike).astype(float), lipschitz=True, epsilon=epsilon)


def _smoothed_call(params, epsilon):
    strike = _param(params, "strike", 0.0)
    width = _param(params, "width", 0.1)
    if width <= 0.0:
        raise PayoffError(f"smoothing width must be positive, got {width}")
    return Payoff(
        name="smoothed_call",
        Phi=lambda y: width * np.logaddexp(0.0, (np.asarray(y, dtype=float) - strike) / width),
        dPhi=lambda y: expit((np.asarray(y, dtype=float) - strike) / width),
        lipschitz=True, epsilon=epsilon,
    )


def _digital(params, epsilon):
    strike = _param(params, "strike", 0.0)
    return Payoff(name="digital", Phi=lambda y: (np.asarray(y) > strike).astype(float),
                  bounded=True, epsilon=epsilon)


def _exp_square(params, epsilon):
    rate = _param(params, "rate", 1.0)
    return Payoff(
        name="exp_square",
        Phi=lambda y: np.exp(rate * np.asarray(y, dtype=float) ** 2),
        dPhi=lambda y: 2.0 * rate * np.asarray(y, dtype=float) * np.exp(rate * np.asarray(y, dtype=float) ** 2),
        epsilon=epsilon,
    )


BUILTIN_PAYOFFS: Dict[str, Callable[[Dict[str, Any], float], Payoff]] = {
    "identity": _identity,
    "square": _square,
    "power": _power,
    "constant": _constant,
    "call": _call,
    "smoothed_call": _smoothed_call,
    "digital": _digital,
    "exp_square": _exp_square,
}


def make_payoff(payoff_id: str, params: Optional[Dict[str, Any]] = None, epsilon: Optional[float] = None) -> Payoff:
    """Build a registered payoff; `epsilon` defaults to the bel_epsilon setting."""
    builder = BUILTIN_PAYOFFS.get(payoff_id)
    if builder is None:
        raise PayoffError(f"Unknown payoff: {payoff_id}. Must be one of {sorted(BUILTIN_PAYOFFS)}")
    if epsilon is None:
        epsilon = get_settings().numerics.bel_epsilon
    return builder(dict(params or {}), epsilon)


def weight_schedule(name: str, grid: TimeGrid, a: Callable[[float], float]) -> WeightSchedule:
    """Cell averages of a on the grid, rescaled so that Σ cell·Δ = 1."""
    times = grid.times
    averages = np.array([quad(a, times[k], times[k + 1])[0] / grid.dt for k in range(grid.steps)])
    total = float(np.sum(averages) * grid.dt)
    if not np.isfinite(total) or total <= 0.0:
        raise PayoffError(f"weight schedule '{name}' must have a positive finite integral, got {total}")
    cell_values = averages / total
    return WeightSchedule(name=name, grid=grid, a=a, cell_values=cell_values,
                          integral_check=float(np.sum(cell_values) * grid.dt))


def make_weight_schedule(schedule_id: str, grid: TimeGrid) -> WeightSchedule:
    T = grid.T
    if schedule_id == "uniform":
        return weight_schedule("uniform", grid, lambda s: 1.0 / T)
    if schedule_id == "linear":
        return weight_schedule("linear", grid, lambda s: 2.0 * s / T ** 2)
    raise PayoffError(f"Unknown weight schedule: {schedule_id}. Must be one of ['linear', 'uniform']")
