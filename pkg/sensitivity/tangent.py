"""First-variation particles ∂ₓX_t and the law-derivative ∂ₓϱ (d = 1).

J^i_{k+1} = J^i_k + Δ·[∂₂b·J^i_k + ∂₃b·(m₂^i·J^i_k + m₃^i)]
  m₂^i = (1/N)Σ_j ∂₂φ(t_k, X^i_k, X^j_k)
  m₃^i = (1/N)Σ_j ∂₃φ(t_k, X^i_k, X^j_k)·J^j_k
with ∂₂b, ∂₃b evaluated at (t_k, X^i_k, ρ^i_k).
"""

import logging
from typing import NamedTuple, Optional, Union
import numpy as np

from engine.workers import map_chunks, resolve_workers
from models.coefficients import CoefficientFn, CoefficientPair
from models.ensemble import PathEnsemble
from models.sensitivity import TangentEnsemble
from utils.errors import SensitivityError, SimulationError

logger = logging.getLogger(__name__)


class StepTerms(NamedTuple):
    db_dy: np.ndarray
    db_dz: np.ndarray
    mean_dphi_dy: np.ndarray
    dx_rho: np.ndarray


def require_smooth(pair: CoefficientPair, ens: Optional[PathEnsemble] = None) -> None:
    if pair.dim != 1 or (ens is not None and ens.dim != 1):
        raise SensitivityError("sensitivities are implemented for d = 1 only")
    if not pair.flags.smooth or not pair.has_jacobians():
        raise SensitivityError(
            f"pair '{pair.name}' is not smooth; mollify it or use a smoothed built-in first"
        )


def require_same_ensemble(ens: PathEnsemble, fingerprint: str, what: str) -> None:
    if fingerprint != ens.fingerprint:
        raise SensitivityError(f"{what} was derived from ensemble {fingerprint!r}, not {ens.fingerprint!r}")


def _scalar_jacobian(fn: CoefficientFn, t: float, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.asarray(fn(t, y, z), dtype=float)[..., 0, 0]


def pairwise_jacobian_mean(fn: CoefficientFn, t: float, y: np.ndarray, points: np.ndarray,
                           weights: Optional[np.ndarray], y_independent: bool,
                           workers: int = 1) -> np.ndarray:
    """(1/N)Σ_j fn(t, y_i, X_j)·w_j for each row y_i (shape (n, 1)); returns (n,)."""
    if y_independent:
        values = _scalar_jacobian(fn, t, points[:1], points)
        if weights is not None:
            values = values * weights
        return np.full(y.shape[0], values.mean())

    def block(a: int, b: int) -> np.ndarray:
        values = _scalar_jacobian(fn, t, y[a:b, None, :], points[None, :, :])
        if weights is not None:
            values = values * weights[None, :]
        return values.mean(axis=1)

    return map_chunks(block, y.shape[0], workers)


def step_terms(ens: PathEnsemble, pair: CoefficientPair, J_k: np.ndarray, k: int,
               workers: int = 1) -> StepTerms:
    """Coefficient Jacobians and law means along the solution at step k."""
    t = float(ens.grid.times[k])
    states = ens.states[:, k, :]
    rho = ens.rho[:, k, :]
    y_independent = pair.flags.phi_y_independent
    if y_independent:
        mean_dphi_dy = np.zeros(ens.n_particles)
    else:
        mean_dphi_dy = pairwise_jacobian_mean(pair.dphi_dy, t, states, states, None, False, workers)
    return StepTerms(
        db_dy=_scalar_jacobian(pair.db_dy, t, states, rho),
        db_dz=_scalar_jacobian(pair.db_dz, t, states, rho),
        mean_dphi_dy=mean_dphi_dy,
        dx_rho=pairwise_jacobian_mean(pair.dphi_dz, t, states, states, J_k, y_independent, workers),
    )


def propagate_tangent(ens: PathEnsemble, pair: CoefficientPair, workers: Optional[int] = None) -> TangentEnsemble:
    require_smooth(pair, ens)
    workers = resolve_workers(workers)
    n, m, dt = ens.n_particles, ens.grid.steps, ens.grid.dt
    J = np.empty((n, m + 1))
    J[:, 0] = 1.0
    for k in range(m):
        terms = step_terms(ens, pair, J[:, k], k, workers)
        J[:, k + 1] = J[:, k] + dt * (
            terms.db_dy * J[:, k] + terms.db_dz * (terms.mean_dphi_dy * J[:, k] + terms.dx_rho)
        )
        if not np.all(np.isfinite(J[:, k + 1])):
            particle = int(np.argwhere(~np.isfinite(J[:, k + 1]))[0][0])
            raise SimulationError(f"non-finite tangent at step {k + 1}, particle {particle}",
                                  step=k + 1, particle=particle)
    logger.debug("propagated tangent for %s: mean terminal J = %.6g", pair.name, J[:, -1].mean())
    return TangentEnsemble(grid=ens.grid, J=J, ensemble_fingerprint=ens.fingerprint)


def dx_rho(ens: PathEnsemble, tang: TangentEnsemble, pair: CoefficientPair, k: int,
           y: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """(1/N)Σ_j ∂₃φ(t_k, y, X^j_k)·J^j_k with y frozen; scalar y gives a float."""
    require_smooth(pair, ens)
    require_same_ensemble(ens, tang.ensemble_fingerprint, "tangent")
    if not 0 <= k <= ens.grid.steps:
        raise ValueError(f"step index {k} outside 0..{ens.grid.steps}")
    y_arr = np.asarray(y, dtype=float)
    rows = y_arr.reshape(-1, 1)
    points = ens.states[:, k, :]
    t = float(ens.grid.times[k])
    values = pairwise_jacobian_mean(pair.dphi_dz, t, rows, points, tang.J[:, k],
                                    pair.flags.phi_y_independent)
    return float(values[0]) if y_arr.ndim == 0 else values.reshape(y_arr.shape)
