"""Operations on empirical measures: CDF, φ-integration, moments, W1."""

import logging
from typing import Union
import numpy as np
from scipy.special import ndtr, ndtri

from models.coefficients import CoefficientPair
from models.measure import EmpiricalMeasure
from utils.errors import MeasureError

logger = logging.getLogger(__name__)

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_PAIRWISE_CHUNK = 2048


def _require_1d(mu: EmpiricalMeasure, what: str) -> None:
    if mu.dim != 1:
        raise MeasureError(f"{what} is defined for d = 1 only, got d = {mu.dim}")


def cdf(mu: EmpiricalMeasure, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """(1/N)·#{i : X_i ≤ u}, right-continuous; u may be an array of thresholds."""
    _require_1d(mu, "cdf")
    counts = np.searchsorted(mu.sorted_points, u, side="right")
    result = counts / mu.size
    return float(result) if np.ndim(result) == 0 else result


def integrate_phi(mu: EmpiricalMeasure, pair: CoefficientPair, t: float, y: np.ndarray) -> np.ndarray:
    """(1/N)Σ_j φ(t, y, X_j) for a single state y (d,) or a batch (n, d)."""
    if pair.dim != mu.dim:
        raise MeasureError(f"pair dimension {pair.dim} does not match measure dimension {mu.dim}")
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    batch = y[None, :] if single else y
    if batch.shape[-1] != mu.dim:
        raise MeasureError(f"state has dimension {batch.shape[-1]}, expected {mu.dim}")

    points = mu.points
    if pair.flags.phi_y_independent:
        values = np.asarray(pair.phi(t, points[:1], points), dtype=float)
        _check_finite(values, t)
        mean = values.mean(axis=0)
        result = np.broadcast_to(mean, batch.shape).copy()
    else:
        result = np.empty(batch.shape)
        for start in range(0, batch.shape[0], _PAIRWISE_CHUNK):
            block = batch[start:start + _PAIRWISE_CHUNK]
            values = np.asarray(pair.phi(t, block[:, None, :], points[None, :, :]), dtype=float)
            _check_finite(values, t)
            result[start:start + block.shape[0]] = values.mean(axis=1)
    return result[0] if single else result


def _check_finite(values: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(values)):
        raise MeasureError(f"non-finite phi evaluation at t = {t}")


def wasserstein1(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Exact W1 between equal-size 1-D empirical measures (mean gap of order statistics)."""
    _require_1d(mu, "wasserstein1")
    _require_1d(nu, "wasserstein1")
    if mu.size != nu.size:
        raise MeasureError(f"wasserstein1 needs equal particle counts, got {mu.size} and {nu.size}")
    return float(np.mean(np.abs(mu.sorted_points - nu.sorted_points)))


def _gaussian_partial(x: np.ndarray, mean: float, std: float) -> np.ndarray:
    """H(x) = ∫_{-∞}^x G(v) dv for the N(mean, std²) CDF G."""
    z = (x - mean) / std
    return (x - mean) * ndtr(z) + std * _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def wasserstein1_to_gaussian(mu: EmpiricalMeasure, mean: float, std: float) -> float:
    """Exact W1 = ∫|F_N − G| between a 1-D empirical measure and N(mean, std²).

    Between consecutive atoms F_N is a constant c, and ∫|c − G| splits at the
    point where G crosses c; each piece integrates in closed form through H.
    """
    _require_1d(mu, "wasserstein1_to_gaussian")
    if std < 0.0:
        raise MeasureError("std must be nonnegative")
    x = mu.sorted_points
    if std == 0.0:
        return float(np.mean(np.abs(x - mean)))

    n = x.size
    left_tail = _gaussian_partial(x[0], mean, std)
    right_tail = _gaussian_partial(x[-1], mean, std) - (x[-1] - mean)
    if n == 1:
        return float(left_tail + right_tail)

    # [x_{k-1}, x_k) carries F_N = k/n; G crosses that level once
    lo, hi = x[:-1], x[1:]
    level = np.arange(1, n) / n
    split = np.clip(mean + std * ndtri(level), lo, hi)
    h_lo = _gaussian_partial(lo, mean, std)
    h_split = _gaussian_partial(split, mean, std)
    h_hi = _gaussian_partial(hi, mean, std)
    below = level * (split - lo) - (h_split - h_lo)
    above = (h_hi - h_split) - level * (hi - split)
    return float(left_tail + right_tail + np.sum(below + above))


def moments(mu: EmpiricalMeasure, order: int = 1) -> np.ndarray:
    """Sample mean (order 1) or population covariance (order 2, divides by N)."""
    if order == 1:
        return mu.points.mean(axis=0)
    if order == 2:
        centred = mu.points - mu.points.mean(axis=0)
        return centred.T @ centred / mu.size
    raise MeasureError(f"moment order must be 1 or 2, got {order}")
