"""Delta estimators for ∂ₓE[Φ(X_T^x)] in d = 1.

delta_bel needs no derivative of Φ: with A_k = Σ_{l ≤ k} a_l·Δ,

    S^i = Σ_k [a_k·J^i_k + ∂₃b(t_k, y, ϱ_k(y))·∂ₓϱ_k(y)·A_k]·ΔW^i_k,   y = X^i_k
    estimate = mean_i Φ(X^i_T)·S^i
"""

import logging
from typing import Literal, Optional, Tuple
import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.integrate import quad
from scipy.special import logsumexp

from config.settings import get_settings
from engine.rng import brownian_increments
from engine.simulate import as_state, law_integrals, simulate
from engine.workers import resolve_workers
from models.coefficients import CoefficientPair
from models.ensemble import PathEnsemble, TimeGrid
from models.sensitivity import AdmissibilityReport, DeltaEstimate, Payoff, TangentEnsemble, WeightSchedule
from sensitivity.tangent import pairwise_jacobian_mean, require_same_ensemble, require_smooth, step_terms
from utils.errors import PayoffError, SensitivityError

logger = logging.getLogger(__name__)

MeanFieldArgument = Literal["solution", "brownian"]

_LADDER_RATIO = 1.5
_LADDER_RUNGS = 40
_TAIL_RUN = 3
_NEGLIGIBLE_LOG = 50.0
_SCAN_POINTS = 8001
_ADAPTIVE_LIMIT = 500
_ORDER_DOUBLING_RTOL = 0.05


def _sample_estimate(samples: np.ndarray, method: str, config_digest: str, notes=None) -> DeltaEstimate:
    n = samples.shape[0]
    std_error = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return DeltaEstimate(value=float(np.mean(samples)), std_error=std_error, n_samples=n,
                         method=method, config_digest=config_digest, notes=notes or [])


def _evaluate_payoff(payoff: Payoff, x: np.ndarray) -> np.ndarray:
    values = np.asarray(payoff.Phi(x), dtype=float)
    if not np.all(np.isfinite(values)):
        raise PayoffError(f"payoff '{payoff.name}' is not finite on the terminal sample")
    return values


def _weighted_norm(payoff: Payoff, T: float, points: int, exponent: float) -> float:
    """log ∫|Φ(y)|^{2p}·exp(−y²/4T) dy via Gauss–Hermite with y = 2√T·x."""
    x, w = hermgauss(points)
    y = 2.0 * np.sqrt(T) * x
    values = np.asarray(payoff.Phi(y), dtype=float)
    if not np.all(np.isfinite(values)):
        bad = float(y[np.argmax(~np.isfinite(values))])
        raise PayoffError(f"payoff '{payoff.name}' is not finite at quadrature node y = {bad}")
    with np.errstate(divide="ignore"):
        log_terms = np.log(w) + exponent * np.log(np.abs(values))
    return float(logsumexp(log_terms) + np.log(2.0 * np.sqrt(T)))


def _log_integrand(payoff: Payoff, y: np.ndarray, T: float, exponent: float) -> Tuple[np.ndarray, np.ndarray]:
    """(|Φ(y)|, 2p·log|Φ(y)| − y²/4T); an overflowing |Φ| is inf in both."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        magnitude = np.abs(np.asarray(payoff.Phi(y), dtype=float))
        return magnitude, exponent * np.log(magnitude) - y * y / (4.0 * T)


def _resolved_tail(payoff: Payoff, y: np.ndarray, T: float, exponent: float) -> Optional[np.ndarray]:
    """Log-integrand on the ladder y up to the first rung where |Φ| overflows; None if Φ is NaN there."""
    magnitude, values = _log_integrand(payoff, y, T, exponent)
    if np.any(np.isnan(magnitude)):
        return None
    overflow = np.flatnonzero(np.isinf(magnitude))
    return values[:overflow[0]] if overflow.size else values


def _decay_edge(values: np.ndarray, peak: float) -> Optional[int]:
    """First rung of the closing stretch that falls monotonically and stays _NEGLIGIBLE_LOG below peak."""
    if values.size < _TAIL_RUN:
        return None
    falling = np.append((values[1:] < values[:-1]) | np.isneginf(values[1:]), True)
    settled = falling & (values <= peak - _NEGLIGIBLE_LOG)
    unsettled = np.flatnonzero(~settled)
    edge = int(unsettled[-1]) + 1 if unsettled.size else 0
    return edge if values.size - edge >= _TAIL_RUN else None


def _adaptive_log_norm(payoff: Payoff, T: float, exponent: float, left: float, right: float) -> float:
    """log ∫ |Φ|^{2p} ω_T over [−left, right] by adaptive quadrature, scaled by the scanned peak."""
    y = np.linspace(-left, right, _SCAN_POINTS)
    scan = _log_integrand(payoff, y, T, exponent)[1]
    peak = float(np.max(scan))
    if np.isneginf(peak):
        return peak
    interior = scan[1:-1]
    bumps = (interior >= scan[:-2]) & (interior >= scan[2:]) & (interior > peak - _NEGLIGIBLE_LOG)
    points = y[1:-1][bumps][:_ADAPTIVE_LIMIT // 10]

    def integrand(v: float) -> float:
        return float(np.exp(_log_integrand(payoff, np.array([v]), T, exponent)[1][0] - peak))

    value, _ = quad(integrand, -left, right, points=points, limit=_ADAPTIVE_LIMIT, epsabs=0.0, epsrel=1e-9)
    return peak + float(np.log(value)) if value > 0.0 else float("-inf")


def validate_payoff(payoff: Payoff, T: float, quad_points: Optional[int] = None) -> AdmissibilityReport:
    """Decide whether ∫|Φ|^{2p} ω_T is finite, ω_T(y) = exp(−|y|²/4T).

    The verdict comes from the tails. On a geometric ladder to either side the
    log-integrand must close with a falling stretch far below its peak, so
    polynomial growth of any degree passes once the Gaussian weight takes
    over. The value is Gauss–Hermite when doubling the order leaves it in
    place, and adaptive quadrature over the decay window otherwise.
    """
    quad_points = quad_points or get_settings().numerics.payoff_quad_points
    if quad_points < 32:
        raise PayoffError(f"quad_points must be >= 32, got {quad_points}")
    exponent = payoff.weighted_norm_exponent
    report = dict(payoff_name=payoff.name, horizon=T, exponent=exponent, quad_points=quad_points)

    start = np.sqrt(T) * float(np.max(hermgauss(quad_points)[0]))
    rungs = start * _LADDER_RATIO ** np.arange(_LADDER_RUNGS)
    tails = {side: _resolved_tail(payoff, side * rungs, T, exponent) for side in (1.0, -1.0)}
    centre = _log_integrand(payoff, np.linspace(-start, start, _SCAN_POINTS), T, exponent)[1]
    known = np.concatenate([centre] + [tail for tail in tails.values() if tail is not None])
    known = known[np.isfinite(known)]
    if known.size == 0 and all(tail is not None for tail in tails.values()):
        return AdmissibilityReport(**report, value=0.0, log_value=float("-inf"), finite=True)
    peak = float(np.max(known)) if known.size else float("inf")

    edges = {}
    for side, tail in tails.items():
        edge = None if tail is None else _decay_edge(tail, peak)
        if edge is None:
            return AdmissibilityReport(**report, value=float("inf"), finite=False,
                                       detail=f"integrand does not decay for {'+' if side > 0 else '-'}y")
        edges[side] = float(rungs[edge])

    coarse = _weighted_norm(payoff, T, quad_points, exponent)
    log_value = _weighted_norm(payoff, T, 2 * quad_points, exponent)
    detail = None
    if not np.isneginf(log_value) and abs(np.expm1(coarse - log_value)) > _ORDER_DOUBLING_RTOL:
        log_value = _adaptive_log_norm(payoff, T, exponent, edges[-1.0], edges[1.0])
        detail = "adaptive quadrature over the decay window"
    with np.errstate(over="ignore"):
        value = float(np.exp(log_value))
    return AdmissibilityReport(**report, value=value, log_value=log_value, finite=True, detail=detail)


def _check_schedule(ens: PathEnsemble, schedule: WeightSchedule) -> None:
    if schedule.grid.steps != ens.grid.steps or schedule.grid.T != ens.grid.T:
        raise SensitivityError("weight schedule grid differs from the ensemble grid")


def delta_bel(ens: PathEnsemble, tang: TangentEnsemble, pair: CoefficientPair, payoff: Payoff,
              schedule: WeightSchedule, mean_field_argument: MeanFieldArgument = "solution",
              workers: Optional[int] = None, config_digest: str = "") -> DeltaEstimate:
    require_smooth(pair, ens)
    require_same_ensemble(ens, tang.ensemble_fingerprint, "tangent")
    _check_schedule(ens, schedule)
    if mean_field_argument not in ("solution", "brownian"):
        raise SensitivityError(f"unknown mean_field_argument '{mean_field_argument}'")
    admissibility = validate_payoff(payoff, ens.grid.T)
    if not admissibility.finite:
        raise PayoffError(f"payoff '{payoff.name}' is not admissible: {admissibility.detail}")
    workers = resolve_workers(workers)

    cumulative = schedule.cumulative
    a = schedule.cell_values
    dW = ens.dW[:, :, 0]
    brownian = np.full(ens.n_particles, ens.x0[0])
    weight = np.zeros(ens.n_particles)
    for k in range(ens.grid.steps):
        J_k = tang.J[:, k]
        if mean_field_argument == "solution":
            terms = step_terms(ens, pair, J_k, k, workers)
            correction = terms.db_dz * terms.dx_rho
        else:
            correction = _brownian_correction(ens, pair, J_k, k, brownian, workers)
            brownian = brownian + dW[:, k]
        weight += (a[k] * J_k + correction * cumulative[k]) * dW[:, k]

    samples = _evaluate_payoff(payoff, ens.terminal[:, 0]) * weight
    estimate = _sample_estimate(samples, "bel", config_digest,
                                notes=[] if mean_field_argument == "solution" else ["mean_field_argument=brownian"])
    logger.info("bel delta for %s / %s: %.6g ± %.3g", pair.name, payoff.name, estimate.value, estimate.std_error)
    return estimate


def _brownian_correction(ens: PathEnsemble, pair: CoefficientPair, J_k: np.ndarray, k: int,
                         y: np.ndarray, workers: int) -> np.ndarray:
    t = float(ens.grid.times[k])
    rows = y[:, None]
    snapshot = ens.snapshot(k)
    rho = law_integrals(pair, snapshot, t, rows, workers)
    db_dz = np.asarray(pair.db_dz(t, rows, rho), dtype=float)[:, 0, 0]
    dx = pairwise_jacobian_mean(pair.dphi_dz, t, rows, snapshot.points, J_k,
                                pair.flags.phi_y_independent, workers)
    return db_dz * dx


def delta_pathwise(ens: PathEnsemble, tang: TangentEnsemble, payoff: Payoff,
                   config_digest: str = "") -> DeltaEstimate:
    require_same_ensemble(ens, tang.ensemble_fingerprint, "tangent")
    if payoff.dPhi is None:
        raise PayoffError(f"payoff '{payoff.name}' has no derivative; pathwise delta is unavailable")
    derivative = np.asarray(payoff.dPhi(ens.terminal[:, 0]), dtype=float)
    samples = derivative * tang.terminal
    return _sample_estimate(samples, "pathwise", config_digest)


def delta_fd(pair: CoefficientPair, grid: TimeGrid, n_particles: int, x: float, h: Optional[float], seed: int,
             payoff: Payoff, workers: Optional[int] = None, config_digest: str = "") -> DeltaEstimate:
    """Central difference with common random numbers: both runs reuse one set of increments.

    `h = None` takes the fd_step setting.
    """
    if h is None:
        h = get_settings().numerics.fd_step
    if h <= 0.0:
        raise SensitivityError(f"finite-difference step must be positive, got {h}")
    if pair.dim != 1:
        raise SensitivityError("finite-difference delta is implemented for d = 1 only")
    workers = resolve_workers(workers)
    x = float(as_state(x, 1)[0])
    dW = brownian_increments(seed, n_particles, grid.steps, 1, grid.dt, workers)
    up = simulate(pair, grid, n_particles, x + h, seed, workers=workers, dW=dW)
    down = simulate(pair, grid, n_particles, x - h, seed, workers=workers, dW=dW)
    samples = (_evaluate_payoff(payoff, up.terminal[:, 0]) - _evaluate_payoff(payoff, down.terminal[:, 0])) / (2.0 * h)

    estimate = _sample_estimate(samples, "central_fd", config_digest)
    if estimate.std_error > abs(estimate.value):
        note = f"noise-dominated difference: std_error {estimate.std_error:.3g} > |value| at h = {h!r}"
        logger.warning("%s for %s", note, pair.name)
        estimate = estimate.model_copy(update={"notes": estimate.notes + [note]})
    return estimate
