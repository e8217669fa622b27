import logging
from typing import Optional
import numpy as np

from engine.rng import brownian_increments
from engine.simulate import as_state, run_euler
from engine.workers import resolve_workers
from measure.empirical import wasserstein1
from models.coefficients import CoefficientPair
from models.ensemble import LawFlow, PathEnsemble, PicardResult, TimeGrid, ensemble_fingerprint
from utils.errors import MeasureError

logger = logging.getLogger(__name__)


def sup_wasserstein(previous: LawFlow, current: LawFlow) -> float:
    return max(wasserstein1(p, c) for p, c in zip(previous.snapshots, current.snapshots))


def picard_iterate(pair: CoefficientPair, grid: TimeGrid, n_particles: int, x0, seed: int,
                   max_iter: int = 20, tol: float = 1e-3, workers: Optional[int] = None) -> PicardResult:
    """Fixed-point iteration on the law flow with frozen-law drift and common noise.

    The first law flow is that of the zero-drift paths x0 + W. Each iteration
    re-simulates against the previous flow; history[j] is the sup over grid
    times of W1 between consecutive flows.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if n_particles < 2:
        raise MeasureError("at least two particles are needed for an empirical law")
    workers = resolve_workers(workers)
    x0 = as_state(x0, pair.dim)
    dW = brownian_increments(seed, n_particles, grid.steps, pair.dim, grid.dt, workers)

    initial = np.empty((n_particles, grid.steps + 1, pair.dim))
    initial[:, 0, :] = x0
    initial[:, 1:, :] = x0 + np.cumsum(dW, axis=1)
    flow = LawFlow.from_states(grid, initial)

    history = []
    converged = False
    states = rho = None
    for iteration in range(1, max_iter + 1):
        states, rho = run_euler(pair, grid, x0, dW, law_flow=flow, workers=workers)
        new_flow = LawFlow.from_states(grid, states)
        distance = sup_wasserstein(flow, new_flow)
        history.append(distance)
        flow = new_flow
        logger.info("picard iteration %d for %s: sup W1 = %.6g", iteration, pair.name, distance)
        if distance <= tol:
            converged = True
            break

    if not converged:
        logger.warning("picard iteration for %s did not reach tol %g in %d iterations (last %.6g)",
                       pair.name, tol, max_iter, history[-1])

    ensemble = PathEnsemble(
        grid=grid, n_particles=n_particles, x0=x0, states=states, dW=dW, rho=rho, seed=seed,
        scheme_tag="frozen_law",
        fingerprint=ensemble_fingerprint(pair.name, grid, n_particles, x0, seed, "frozen_law"),
    )
    return PicardResult(ensemble=ensemble, law_flow=flow, iterations=len(history),
                        history=history, converged=converged)
