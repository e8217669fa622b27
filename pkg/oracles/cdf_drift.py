"""Gaussian reduction of dX = F_{X_t}(u) dt + dB.

The drift is deterministic, so X_t ~ N(x0 + A(t), t) with
A'(t) = Φ_N((u − x0 − A(t))/√t), A(0) = 0. The ODE is integrated in s = √t,
where dA/ds = 2s·Φ_N((u − x0 − A)/s) has no singularity at the origin.
"""

import logging
import math
from typing import Dict, Optional
import numpy as np
from scipy.special import ndtr

from config.settings import get_settings
from models.ensemble import TimeGrid
from models.oracle import OracleSolution
from oracles.rk4 import richardson_gap, rk4_on_nodes, substeps_for
from utils.errors import OracleError

logger = logging.getLogger(__name__)


def cdf_drift_rate(t: float, A: float, u: float, x0: float) -> float:
    """A'(t); at t = 0 the limit Φ_N(±∞) is taken by the sign of u − x0 − A."""
    gap = u - x0 - A
    if t <= 0.0:
        return 1.0 if gap > 0.0 else (0.0 if gap < 0.0 else 0.5)
    return float(ndtr(gap / math.sqrt(t)))


def _rate_in_sqrt_time(u: float, x0: float):
    def rate(s: float, A: float) -> float:
        return 2.0 * s * cdf_drift_rate(s * s, A, u, x0)
    return rate


def drift_path(u: float, x0: float, grid: TimeGrid, steps: Optional[int] = None) -> np.ndarray:
    """A(t_k) on the grid with `steps` RK4 steps in total."""
    steps = steps or get_settings().numerics.rk4_steps
    nodes = np.sqrt(grid.times)
    return rk4_on_nodes(_rate_in_sqrt_time(u, x0), 0.0, nodes, substeps_for(steps, grid.steps))


def cdf_drift_oracle(u: float, x0: float, grid: TimeGrid, steps: Optional[int] = None) -> OracleSolution:
    A = drift_path(u, x0, grid, steps)
    return OracleSolution(grid=grid, mean=x0 + A, variance=grid.times.copy(), law_family="gaussian")


def cdf_drift_fixture(
    u: float, x0: float, T: float, steps: Optional[int] = None, tolerance: Optional[float] = None
) -> Dict[str, float]:
    """Terminal A(T) with the RK4 parameters and Richardson gap that certify it.

    Raises OracleError when doubling the step count moves A by more than `tolerance`.
    """
    numerics = get_settings().numerics
    steps = steps or numerics.rk4_steps
    tolerance = numerics.richardson_tolerance if tolerance is None else tolerance
    grid = TimeGrid(T=T, steps=1)
    nodes = np.sqrt(grid.times)
    rate = _rate_in_sqrt_time(u, x0)
    value = float(rk4_on_nodes(rate, 0.0, nodes, steps)[-1])
    gap = richardson_gap(rate, 0.0, nodes, steps)
    logger.debug("cdf drift fixture u=%s x0=%s T=%s: A(T)=%r, richardson gap %.3e", u, x0, T, value, gap)
    if not gap <= tolerance:
        raise OracleError(
            f"RK4 for A(T) did not settle: gap {gap:.3e} between {steps} and {2 * steps} steps exceeds {tolerance:.1e}"
        )
    return {"u": u, "x0": x0, "T": T, "rk4_steps": steps, "A_T": value, "richardson_gap": gap}
