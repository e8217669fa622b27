"""Interacting-particle Euler–Maruyama scheme for the mean-field SDE.

X^i_{k+1} = X^i_k + b(t_k, X^i_k, ρ^i_k)Δ + ΔW^i_k,  ρ^i_k = (1/N)Σ_j φ(t_k, X^i_k, X^j_k)

The law integral is taken either against the ensemble's own empirical
measure (interacting) or against a frozen law flow (frozen_law).
"""

import logging
from typing import Optional, Tuple
import numpy as np

from engine.rng import brownian_increments
from engine.workers import map_chunks, resolve_workers
from measure.empirical import integrate_phi
from models.coefficients import CoefficientPair
from models.ensemble import LawFlow, PathEnsemble, TimeGrid, ensemble_fingerprint
from models.measure import EmpiricalMeasure
from utils.errors import CoefficientError, MeasureError, SimulationError

logger = logging.getLogger(__name__)


def as_state(x0, dim: int) -> np.ndarray:
    state = np.atleast_1d(np.asarray(x0, dtype=float))
    if state.ndim != 1 or state.shape[0] != dim:
        raise CoefficientError(f"initial state has shape {state.shape}, pair dimension is {dim}")
    return state


def _first_bad(values: np.ndarray) -> int:
    return int(np.argwhere(~np.all(np.isfinite(values), axis=-1))[0][0])


def law_integrals(pair: CoefficientPair, mu: EmpiricalMeasure, t: float, states: np.ndarray,
                  workers: int = 1) -> np.ndarray:
    """ρ for every row of states against mu, shape (N, d)."""
    if pair.flags.phi_y_independent:
        return integrate_phi(mu, pair, t, states)
    return map_chunks(lambda a, b: integrate_phi(mu, pair, t, states[a:b]), states.shape[0], workers)


def run_euler(pair: CoefficientPair, grid: TimeGrid, x0: np.ndarray, dW: np.ndarray,
              law_flow: Optional[LawFlow] = None, workers: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Euler–Maruyama on prescribed increments; returns (states, rho)."""
    n, m, d = dW.shape
    dt = grid.dt
    times = grid.times
    states = np.empty((n, m + 1, d))
    rho = np.empty((n, m, d))
    states[:, 0, :] = x0

    for k in range(m):
        t = float(times[k])
        current = states[:, k, :]
        mu = law_flow.snapshots[k] if law_flow is not None else EmpiricalMeasure(points=current)
        try:
            rho[:, k, :] = law_integrals(pair, mu, t, current, workers)
        except MeasureError as e:
            raise SimulationError(f"law integral failed at step {k}: {e}", step=k)
        drift = pair.b(t, current, rho[:, k, :])
        states[:, k + 1, :] = current + drift * dt + dW[:, k, :]
        if not np.all(np.isfinite(states[:, k + 1, :])):
            particle = _first_bad(states[:, k + 1, :])
            raise SimulationError(f"non-finite state at step {k + 1}, particle {particle}",
                                  step=k + 1, particle=particle)
    return states, rho


def simulate(pair: CoefficientPair, grid: TimeGrid, n_particles: int, x0, seed: int,
             workers: Optional[int] = None, dW: Optional[np.ndarray] = None) -> PathEnsemble:
    """Simulate the interacting particle system; identical inputs give bit-identical output."""
    if n_particles < 2:
        raise MeasureError("at least two particles are needed for an empirical law")
    workers = resolve_workers(workers)
    x0 = as_state(x0, pair.dim)
    supplied = dW is not None
    if dW is None:
        dW = brownian_increments(seed, n_particles, grid.steps, pair.dim, grid.dt, workers)
    elif np.shape(dW) != (n_particles, grid.steps, pair.dim):
        raise SimulationError(f"increments have shape {np.shape(dW)}, expected {(n_particles, grid.steps, pair.dim)}")

    logger.info("simulating %s: N=%d, M=%d, T=%s, seed=%d", pair.name, n_particles, grid.steps, grid.T, seed)
    states, rho = run_euler(pair, grid, x0, dW, workers=workers)
    return PathEnsemble(
        grid=grid, n_particles=n_particles, x0=x0, states=states, dW=dW, rho=rho, seed=seed,
        scheme_tag="interacting",
        fingerprint=ensemble_fingerprint(pair.name, grid, n_particles, x0, seed, "interacting",
                                         noise=dW if supplied else None),
    )
