"""Mean curve of dX = b(t, E[X_t])dt + dB against the ODE u' = b(t, u).

This is the one oracle that runs the engine: it compares the particle mean
with an engine-independent RK4 curve.
"""

import logging
from typing import Callable, Optional
import numpy as np

from coefficients.builtins import make_builtin
from config.settings import get_settings
from engine.simulate import simulate
from models.ensemble import TimeGrid
from models.oracle import CaratheodoryResult
from oracles.rk4 import rk4_on_nodes, substeps_for

logger = logging.getLogger(__name__)


def caratheodory_solve(b_mean: Callable, x0: float, grid: TimeGrid, n_particles: int, seed: int,
                       db_mean: Optional[Callable] = None, workers: Optional[int] = None,
                       rk4_steps: Optional[int] = None) -> CaratheodoryResult:
    pair = make_builtin("expectation_drift", {"b_mean": b_mean, "db_mean": db_mean})
    ensemble = simulate(pair, grid, n_particles, x0, seed, workers=workers)
    mc_curve = ensemble.states[:, :, 0].mean(axis=0)

    steps = rk4_steps or get_settings().numerics.rk4_steps
    rate = lambda t, m: float(b_mean(t, m))
    rk4_curve = rk4_on_nodes(rate, float(x0), grid.times, substeps_for(steps, grid.steps))
    gap = float(np.max(np.abs(mc_curve - rk4_curve)))
    logger.info("caratheodory bridge: max |mc - rk4| = %.3e over %d grid times", gap, grid.steps + 1)
    return CaratheodoryResult(grid=grid, mc_curve=mc_curve, rk4_curve=rk4_curve, max_abs_gap=gap)
