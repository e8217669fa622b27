"""Round-trip check of the Λ-transform against a direct multiplicative-noise Euler run.

The direct integrator exists only as the oracle for this check:
X_{k+1} = X_k + b(t_k, X_k, ρ_k)Δ + σ(X_k)ΔW_k on the same increments the
transformed run uses.
"""

import logging
from typing import Dict, Optional
import numpy as np

from engine.rng import brownian_increments
from engine.simulate import as_state, law_integrals, simulate
from engine.workers import resolve_workers
from lamperti.transform import build_map, lambda_residual, transform_pair
from measure.empirical import wasserstein1
from models.coefficients import CoefficientPair
from models.ensemble import TimeGrid
from models.lamperti import DiffusionSpec
from models.measure import EmpiricalMeasure
from utils.errors import LampertiError

logger = logging.getLogger(__name__)


def simulate_direct(pair: CoefficientPair, spec: DiffusionSpec, grid: TimeGrid, n_particles: int,
                    x0: float, seed: int, workers: Optional[int] = None,
                    dW: Optional[np.ndarray] = None) -> np.ndarray:
    """Interacting Euler–Maruyama with diffusion σ; returns states of shape (N, M+1)."""
    workers = resolve_workers(workers)
    x0 = as_state(x0, 1)
    if dW is None:
        dW = brownian_increments(seed, n_particles, grid.steps, 1, grid.dt, workers)
    times, dt = grid.times, grid.dt
    states = np.empty((n_particles, grid.steps + 1, 1))
    states[:, 0, :] = x0
    for k in range(grid.steps):
        t = float(times[k])
        current = states[:, k, :]
        rho = law_integrals(pair, EmpiricalMeasure(points=current), t, current, workers)
        nxt = current + pair.b(t, current, rho) * dt + spec.sigma(current) * dW[:, k, :]
        escaped = ~(spec.contains(nxt[:, 0]) & np.isfinite(nxt[:, 0]))
        if np.any(escaped):
            particle = int(np.flatnonzero(escaped)[0])
            raise LampertiError(
                f"direct path left the domain {spec.domain} at step {k + 1}, particle {particle}"
            )
        states[:, k + 1, :] = nxt
    return states[:, :, 0]


def round_trip(pair: CoefficientPair, spec: DiffusionSpec, grid: TimeGrid, n_particles: int,
               x0: float, seed: int, anchor: float = 0.0, workers: Optional[int] = None,
               probes: int = 1000) -> Dict[str, float]:
    """W1 between Λ⁻¹ of the transformed terminal law and the direct terminal law."""
    workers = resolve_workers(workers)
    lmap = build_map(spec, anchor=anchor)
    transformed = transform_pair(pair, lmap, spec)
    dW = brownian_increments(seed, n_particles, grid.steps, 1, grid.dt, workers)

    start = float(lmap.Lambda(np.array([float(x0)]))[0])
    ensemble = simulate(transformed, grid, n_particles, start, seed, workers=workers, dW=dW)
    mapped = lmap.LambdaInv(ensemble.terminal[:, 0])
    direct = simulate_direct(pair, spec, grid, n_particles, x0, seed, workers=workers, dW=dW)

    distance = wasserstein1(EmpiricalMeasure(points=mapped), EmpiricalMeasure(points=direct[:, -1]))
    residual = lambda_residual(lmap, spec, probes=probes, seed=seed)
    logger.info("lamperti round trip %s/%s at M=%d: W1 = %.4g, Lambda residual %.3e",
                pair.name, spec.name, grid.steps, distance, residual["derivative"])
    return {
        "steps": grid.steps,
        "w1_round_trip": distance,
        "lambda_residual": max(residual["derivative"], residual["inverse"]),
        "inverse_lipschitz": lmap.inverse_lipschitz,
    }
