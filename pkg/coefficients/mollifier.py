"""Gaussian mollification of coefficient pairs in the (y, z) arguments.

The kernel integral E[f(y + hξ₁, z + hξ₂)] is computed with a piecewise
Gauss–Legendre rule on ξ ∈ [−8, 8]. The pieces are split at fixed
breakpoints and at every declared kink of f (CoefficientPair.kinks)
translated into ξ-coordinates for the evaluation point. The integrand is
then smooth on each piece, so the value and its Stein-identity
derivatives E[f·ξ]/h move smoothly with the evaluation point and agree
with each other to quadrature accuracy.
"""

import logging
import math
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from models.coefficients import CoefficientPair, MollifierConfig, RegularityFlags
from utils.errors import CoefficientError, MollifierError

logger = logging.getLogger(__name__)

# P(|ξ| > 8) ≈ 1.2e-15
_BREAKS = np.array([-8.0, -3.0, 0.0, 3.0, 8.0])
_CHUNK = 1 << 20


@lru_cache(maxsize=None)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return leggauss(order)


def piecewise_gauss_rule(cuts: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with Σ w f(ξ) ≈ E[f(ξ)], ξ ~ N(0, 1).

    `cuts` has shape S + (K,): extra breakpoints per evaluation point, clipped
    to the window. The result has shape S + (Q,) with
    Q = (len(_BREAKS) − 1 + K)·order; pieces of zero length carry zero weight.
    """
    if order < 1:
        raise CoefficientError("quadrature order must be positive")
    cuts = np.clip(np.asarray(cuts, dtype=float), _BREAKS[0], _BREAKS[-1])
    base = np.broadcast_to(_BREAKS, cuts.shape[:-1] + _BREAKS.shape)
    edges = np.sort(np.concatenate([base, cuts], axis=-1), axis=-1)
    lo, hi = edges[..., :-1, None], edges[..., 1:, None]
    x, w = _legendre(order)
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo) + half * x
    weights = half * w * np.exp(-0.5 * nodes * nodes) / math.sqrt(2.0 * math.pi)
    shape = cuts.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def gaussian_mean_abs_moment(dim: int) -> float:
    """E‖ξ‖ for ξ ~ N(0, I_dim)."""
    return math.sqrt(2.0) * math.exp(gammaln((dim + 1) / 2.0) - gammaln(dim / 2.0))


def _check_finite(values: np.ndarray, what: str, t: float, y: np.ndarray, z: np.ndarray) -> None:
    """values has one row per evaluation point; y and z are the flat point coordinates."""
    finite = np.isfinite(values).reshape(values.shape[0], -1).all(axis=1)
    if finite.all():
        return
    i = int(np.argmin(finite))
    probe = {"t": t, "y": [float(y[i])], "z": [float(z[i])]}
    raise MollifierError(f"non-finite {what} evaluation during mollification at {probe}", probe=probe)


class _KernelSmoother:
    """E[f(t, y + hξ₁, z + hξ₂)] and its (y, z) derivatives via Stein's identity.

    With smooth_y False the y argument is passed through unsmoothed.
    """

    def __init__(self, fn: Callable, bandwidth: float, order: int, smooth_y: bool,
                 y_kinks: Sequence[float], z_kinks: Sequence[float], label: str):
        self.fn = fn
        self.h = bandwidth
        self.order = order
        self.smooth_y = smooth_y
        self.y_kinks = np.asarray(y_kinks, dtype=float)
        self.z_kinks = np.asarray(z_kinks, dtype=float)
        self.label = label

    def _rule(self, centres: np.ndarray, kinks: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        cuts = (kinks - centres[:, None]) / self.h
        nodes, weights = piecewise_gauss_rule(cuts, self.order)
        return np.broadcast_to(nodes, (centres.size, nodes.shape[-1])), \
            np.broadcast_to(weights, (centres.size, weights.shape[-1]))

    def _moments(self, t: float, y: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(E f, E f·ξ₁, E f·ξ₂) for flat coordinate arrays of one chunk."""
        xi_z, w_z = self._rule(z, self.z_kinks)
        if self.smooth_y:
            xi_y, w_y = self._rule(y, self.y_kinks)
        else:
            xi_y, w_y = np.zeros((y.size, 1)), np.ones((y.size, 1))
        yq = y[:, None, None] + self.h * xi_y[:, :, None]
        zq = z[:, None, None] + self.h * xi_z[:, None, :]
        grid_shape = (y.size, xi_y.shape[1], xi_z.shape[1])
        values = np.broadcast_to(np.asarray(self.fn(t, yq[..., None], zq[..., None]), dtype=float)[..., 0],
                                 grid_shape)
        _check_finite(values, self.label, t, y, z)
        fw = values * (w_y[:, :, None] * w_z[:, None, :])
        return (fw.sum(axis=(1, 2)),
                np.einsum("pij,pi->p", fw, xi_y),
                np.einsum("pij,pj->p", fw, xi_z))

    def _evaluate(self, t: float, y: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, ...]:
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        shape = np.broadcast_shapes(y.shape, z.shape)
        if not shape or shape[-1] != 1:
            raise CoefficientError(f"mollified {self.label} expects trailing dimension 1, got shape {shape}")
        flat_y = np.broadcast_to(y, shape).reshape(-1)
        flat_z = np.broadcast_to(z, shape).reshape(-1)
        per_point = (4 + self.y_kinks.size if self.smooth_y else 1) * (4 + self.z_kinks.size) * self.order ** 2
        step = max(1, _CHUNK // per_point)
        parts = [self._moments(t, flat_y[i:i + step], flat_z[i:i + step]) for i in range(0, flat_y.size, step)]
        if not parts:
            return tuple(np.zeros(shape[:-1]) for _ in range(3))
        return tuple(np.concatenate(column).reshape(shape[:-1]) for column in zip(*parts))

    def value(self, t, y, z):
        return self._evaluate(t, y, z)[0][..., None]

    def dy(self, t, y, z):
        if not self.smooth_y:
            return np.zeros(np.broadcast_shapes(np.shape(y), np.shape(z)) + (1,))
        return (self._evaluate(t, y, z)[1] / self.h)[..., None, None]

    def dz(self, t, y, z):
        return (self._evaluate(t, y, z)[2] / self.h)[..., None, None]


def mollify(pair: CoefficientPair, cfg: MollifierConfig) -> CoefficientPair:
    """Smooth (b, φ) with a Gaussian kernel of bandwidth h; the result is flagged smooth."""
    if pair.dim != 1:
        raise CoefficientError(f"mollification is implemented for d = 1, got d = {pair.dim}")
    h, order = cfg.bandwidth, cfg.quadrature_order
    kinks = pair.kinks
    b_smooth = _KernelSmoother(pair.b, h, order, smooth_y=True,
                               y_kinks=kinks.get("b_y", ()), z_kinks=kinks.get("b_z", ()), label="b")
    phi_smooth = _KernelSmoother(pair.phi, h, order, smooth_y=not pair.flags.phi_y_independent,
                                 y_kinks=kinks.get("phi_y", ()), z_kinks=kinks.get("phi_z", ()), label="phi")

    growth: Optional[float] = None
    if pair.growth_constant is not None:
        growth = pair.growth_constant * (1.0 + 2.0 * h * gaussian_mean_abs_moment(pair.dim))

    flags = RegularityFlags(
        lipschitz_z_b=pair.flags.lipschitz_z_b,
        lipschitz_z_phi=pair.flags.lipschitz_z_phi,
        lipschitz_y_phi=pair.flags.lipschitz_y_phi,
        phi_y_independent=pair.flags.phi_y_independent,
        smooth=True,
    )
    logger.debug("mollified %s with bandwidth %s, %d nodes per piece, kinks %s", pair.name, h, order, kinks)
    return CoefficientPair(
        name=f"{pair.name}~h={h!r}",
        dim=pair.dim,
        b=b_smooth.value,
        phi=phi_smooth.value,
        db_dy=b_smooth.dy,
        db_dz=b_smooth.dz,
        dphi_dy=phi_smooth.dy,
        dphi_dz=phi_smooth.dz,
        growth_constant=growth,
        flags=flags,
        time_homogeneous=pair.time_homogeneous,
        params={**pair.params, "bandwidth": h, "quadrature_order": order},
    )
