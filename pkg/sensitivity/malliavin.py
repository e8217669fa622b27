"""Smooth-case Malliavin factor D_sX_t and its relation to the tangent.

log D_sX_t = Σ_{s ≤ k < t} g_k·Δ,  g_k = ∂₂b + ∂₃b·(1/N)Σ_j ∂₂φ(t_k, X_k, X^j_k)

The law term does not see a Brownian perturbation of a single path, so only
the y-derivative of φ enters.
"""

import logging
from typing import Optional
import numpy as np

from engine.workers import resolve_workers
from models.coefficients import CoefficientPair
from models.ensemble import PathEnsemble
from models.sensitivity import MalliavinFactor, RelationReport, TangentEnsemble
from sensitivity.tangent import require_same_ensemble, require_smooth, step_terms

logger = logging.getLogger(__name__)


def malliavin_factor(ens: PathEnsemble, pair: CoefficientPair, workers: Optional[int] = None) -> MalliavinFactor:
    require_smooth(pair, ens)
    workers = resolve_workers(workers)
    dt = ens.grid.dt
    log_increments = np.empty((ens.n_particles, ens.grid.steps))
    ones = np.ones(ens.n_particles)
    for k in range(ens.grid.steps):
        terms = step_terms(ens, pair, ones, k, workers)
        log_increments[:, k] = (terms.db_dy + terms.db_dz * terms.mean_dphi_dy) * dt
    return MalliavinFactor.from_increments(ens.grid, log_increments, ens.fingerprint)


def check_derivative_relation(ens: PathEnsemble, tang: TangentEnsemble, mf: MalliavinFactor,
                              pair: CoefficientPair, s: int, workers: Optional[int] = None) -> RelationReport:
    """Residual of ∂ₓX_t = D_sX_t·∂ₓX_s + ∫_s^t D_uX_t·∂₃b·∂ₓϱ(u, X_u) du for t ≥ s.

    The integral is the left-point sum Σ_k D_{t_{k+1}}X_t·h_k·Δ, evaluated as
    the recursion R_{k+1} = exp(g_kΔ)·R_k + h_kΔ from R_s = J_s.
    """
    require_smooth(pair, ens)
    require_same_ensemble(ens, tang.ensemble_fingerprint, "tangent")
    require_same_ensemble(ens, mf.ensemble_fingerprint, "malliavin factor")
    m = ens.grid.steps
    if not 0 <= s <= m:
        raise ValueError(f"step index {s} outside 0..{m}")
    workers = resolve_workers(workers)
    dt = ens.grid.dt

    relation = tang.J[:, s].copy()
    residuals = [0.0]
    for k in range(s, m):
        terms = step_terms(ens, pair, tang.J[:, k], k, workers)
        relation = np.exp(mf.log_increments[:, k]) * relation + terms.db_dz * terms.dx_rho * dt
        residuals.append(float(np.max(np.abs(tang.J[:, k + 1] - relation))))

    report = RelationReport(s_index=s, max_residual=max(residuals), residual_by_time=residuals)
    logger.info("derivative relation for %s from step %d: max residual %.3e", pair.name, s, report.max_residual)
    return report
