"""Λ-transform to unit diffusion: Λ'σ = 1, and the transformed coefficient pair.

Λ(y) = ∫_{anchor}^{y} dξ/σ(ξ) is tabulated on a knot grid by adaptive
quadrature and completed inside each cell with a 16-point Gauss–Legendre
rule. Λ⁻¹ is a vectorized Newton iteration kept inside table brackets.
"""

import logging
from typing import Any, Dict, Optional, Tuple
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from config.settings import get_settings
from models.coefficients import CoefficientPair, RegularityFlags
from models.lamperti import DiffusionSpec, LampertiMap
from utils.errors import LampertiError

logger = logging.getLogger(__name__)

_GL_X, _GL_W = leggauss(16)
_NEWTON_ITERATIONS = 60
_NEWTON_RTOL = 1e-14
_BOUNDARY_MARGIN = 1e-9


def _sqrt_quadratic(params: Dict[str, Any]) -> DiffusionSpec:
    return DiffusionSpec(
        name="sqrt_quadratic",
        sigma=lambda y: np.sqrt(1.0 + np.asarray(y, dtype=float) ** 2),
        dsigma=lambda y: np.asarray(y, dtype=float) / np.sqrt(1.0 + np.asarray(y, dtype=float) ** 2),
        d2sigma=lambda y: (1.0 + np.asarray(y, dtype=float) ** 2) ** -1.5,
    )


def _constant(params: Dict[str, Any]) -> DiffusionSpec:
    level = float(params.get("level", 1.0))
    if not level > 0.0:
        raise LampertiError(f"constant diffusion level must be positive, got {level}")
    return DiffusionSpec(
        name="constant" if level != 1.0 else "unit",
        sigma=lambda y: np.full(np.shape(y), level),
        dsigma=lambda y: np.zeros(np.shape(y)),
        d2sigma=lambda y: np.zeros(np.shape(y)),
        constant=level,
    )


BUILTIN_DIFFUSIONS = {
    "unit": lambda params: _constant({"level": 1.0}),
    "constant": _constant,
    "sqrt_quadratic": _sqrt_quadratic,
}


def make_diffusion(diffusion_id: str, params: Optional[Dict[str, Any]] = None) -> DiffusionSpec:
    builder = BUILTIN_DIFFUSIONS.get(diffusion_id)
    if builder is None:
        raise LampertiError(f"Unknown diffusion: {diffusion_id}. Must be one of {sorted(BUILTIN_DIFFUSIONS)}")
    return builder(dict(params or {}))


def _sigma_checked(spec: DiffusionSpec, y: np.ndarray) -> np.ndarray:
    values = np.asarray(spec.sigma(y), dtype=float)
    if np.any(~(values > 0.0)):
        bad = float(np.asarray(y).ravel()[np.argmax(~(values.ravel() > 0.0))])
        raise LampertiError(f"sigma must be positive, got {spec.sigma(np.array(bad))} at y = {bad}")
    return values


class _Table:
    """Knots y_j with Λ(y_j), and vectorized evaluation/inversion of Λ."""

    def __init__(self, spec: DiffusionSpec, anchor: float, half_width: float, knots: int, quad_tol: float):
        self.spec = spec
        lo, hi = spec.domain
        left = max(anchor - half_width, lo + _BOUNDARY_MARGIN * max(1.0, abs(lo)) if np.isfinite(lo) else -np.inf)
        right = min(anchor + half_width, hi - _BOUNDARY_MARGIN * max(1.0, abs(hi)) if np.isfinite(hi) else np.inf)
        if not left < anchor < right:
            raise LampertiError(f"anchor {anchor} must lie inside the domain {spec.domain}")
        side = max(2, knots // 2 + 1)
        self.y = np.concatenate([np.linspace(left, anchor, side)[:-1], np.linspace(anchor, right, side)])
        _sigma_checked(self.spec, self.y)
        self.anchor_index = side - 1

        cells = np.array([
            quad(lambda v: 1.0 / float(spec.sigma(np.array(v))), a, b, epsabs=quad_tol, epsrel=quad_tol)[0]
            for a, b in zip(self.y[:-1], self.y[1:])
        ])
        values = np.concatenate([[0.0], np.cumsum(cells)])
        self.values = values - values[self.anchor_index]
        self.values[self.anchor_index] = 0.0
        if np.any(np.diff(self.values) <= 0.0):
            raise LampertiError("tabulated Lambda is not strictly increasing")
        self.quad_tol = quad_tol

    def _cell_integral(self, start: np.ndarray, stop: np.ndarray) -> np.ndarray:
        half = 0.5 * (stop - start)
        mid = 0.5 * (stop + start)
        nodes = mid[..., None] + half[..., None] * _GL_X
        return half * np.sum(_GL_W / _sigma_checked(self.spec, nodes), axis=-1)

    def _far_value(self, y: float) -> float:
        if y > self.y[-1]:
            edge, base, sign = self.y[-1], self.values[-1], 1.0
        else:
            edge, base, sign = self.y[0], self.values[0], -1.0
        integral, _ = quad(lambda v: 1.0 / float(self.spec.sigma(np.array(v))), min(edge, y), max(edge, y),
                           epsabs=self.quad_tol, epsrel=self.quad_tol, limit=200)
        return base + sign * integral

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = np.empty_like(flat)
        inside = (flat >= self.y[0]) & (flat <= self.y[-1])
        if np.any(inside):
            pts = flat[inside]
            j = np.clip(np.searchsorted(self.y, pts, side="right") - 1, 0, len(self.y) - 2)
            out[inside] = self.values[j] + self._cell_integral(self.y[j], pts)
        for i in np.flatnonzero(~inside):
            if not self.spec.contains(flat[i]):
                raise LampertiError(f"y = {flat[i]} lies outside the diffusion domain {self.spec.domain}")
            out[i] = self._far_value(flat[i])
        return out.reshape(y.shape)

    def _far_bracket(self, x: float) -> Tuple[float, float]:
        lo_dom, hi_dom = self.spec.domain
        step = self.y[-1] - self.y[0]
        if x > self.values[-1]:
            lo, hi = self.y[-1], self.y[-1] + step
            while self._far_value(hi) < x:
                lo, hi, step = hi, hi + 2.0 * step, 2.0 * step
                if hi >= hi_dom or not np.isfinite(hi):
                    raise LampertiError(f"cannot bracket Lambda^-1({x}) inside the domain")
        else:
            lo, hi = self.y[0] - step, self.y[0]
            while self._far_value(lo) > x:
                lo, hi, step = lo - 2.0 * step, lo, 2.0 * step
                if lo <= lo_dom or not np.isfinite(lo):
                    raise LampertiError(f"cannot bracket Lambda^-1({x}) inside the domain")
        return lo, hi

    def invert(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        if not np.all(np.isfinite(flat)):
            raise LampertiError("cannot invert Lambda at a non-finite value")
        lo = np.empty_like(flat)
        hi = np.empty_like(flat)
        inside = (flat >= self.values[0]) & (flat <= self.values[-1])
        j = np.clip(np.searchsorted(self.values, flat[inside], side="right") - 1, 0, len(self.y) - 2)
        lo[inside], hi[inside] = self.y[j], self.y[j + 1]
        for i in np.flatnonzero(~inside):
            lo[i], hi[i] = self._far_bracket(flat[i])
        return self._newton(flat, lo, hi).reshape(x.shape)

    def _newton(self, x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        f_lo = self.evaluate(lo) - x
        f_hi = self.evaluate(hi) - x
        span = np.where(f_hi - f_lo > 0.0, f_hi - f_lo, 1.0)
        y = np.clip(lo - f_lo * (hi - lo) / span, lo, hi)
        for _ in range(_NEWTON_ITERATIONS):
            residual = self.evaluate(y) - x
            if np.all(np.abs(residual) <= _NEWTON_RTOL * np.maximum(1.0, np.abs(x))):
                return y
            below = residual < 0.0
            lo = np.where(below, y, lo)
            hi = np.where(below, hi, y)
            step = y - residual * _sigma_checked(self.spec, y)
            outside = (step <= lo) | (step >= hi)
            y = np.where(outside, 0.5 * (lo + hi), step)
        return y


def build_map(spec: DiffusionSpec, anchor: float = 0.0, quad_tol: Optional[float] = None,
              half_width: Optional[float] = None, knots: Optional[int] = None) -> LampertiMap:
    if not spec.contains(np.array(anchor)):
        raise LampertiError(f"anchor {anchor} lies outside the domain {spec.domain}")
    d2Lambda = lambda y: -np.asarray(spec.dsigma(y), dtype=float) / _sigma_checked(spec, y) ** 2

    if spec.constant is not None:
        level = spec.constant
        return LampertiMap(
            Lambda=lambda y: (np.asarray(y, dtype=float) - anchor) / level,
            LambdaInv=lambda x: anchor + level * np.asarray(x, dtype=float),
            dLambda=lambda y: np.full(np.shape(y), 1.0 / level),
            d2Lambda=lambda y: np.zeros(np.shape(y)),
            anchor=anchor,
            inverse_lipschitz=level,
        )

    numerics = get_settings().numerics
    table = _Table(spec, anchor,
                   half_width or numerics.lamperti_half_width,
                   knots or numerics.lamperti_knots,
                   quad_tol or numerics.lamperti_quad_tol)
    lipschitz = float(np.max(_sigma_checked(spec, table.y)))
    logger.debug("built Lambda for %s on [%g, %g] with %d knots", spec.name, table.y[0], table.y[-1], len(table.y))
    return LampertiMap(
        Lambda=table.evaluate,
        LambdaInv=table.invert,
        dLambda=lambda y: 1.0 / _sigma_checked(spec, y),
        d2Lambda=d2Lambda,
        anchor=anchor,
        inverse_lipschitz=lipschitz,
    )


def lambda_residual(lmap: LampertiMap, spec: DiffusionSpec, probes: int = 1000, seed: int = 0,
                    scale: float = 10.0) -> Dict[str, float]:
    """max |Λ'σ − 1| and max |Λ⁻¹(Λ(y)) − y| on random points inside the domain."""
    y = probe_points(spec, probes, seed, lmap.anchor, scale)
    derivative = float(np.max(np.abs(lmap.dLambda(y) * spec.sigma(y) - 1.0)))
    inverse = float(np.max(np.abs(lmap.LambdaInv(lmap.Lambda(y)) - y)))
    return {"derivative": derivative, "inverse": inverse}


def probe_points(spec: DiffusionSpec, count: int, seed: int, centre: float, scale: float) -> np.ndarray:
    """Uniform points in [centre − scale, centre + scale] ∩ domain, by rejection."""
    rng = np.random.default_rng(seed)
    lo, hi = spec.domain
    a, b = max(lo, centre - scale), min(hi, centre + scale)
    points = np.empty(0)
    while points.size < count:
        draw = rng.uniform(a, b, size=2 * count)
        points = np.concatenate([points, draw[spec.contains(draw)]])
    return points[:count]


def transform_pair(pair: CoefficientPair, lmap: LampertiMap, spec: DiffusionSpec) -> CoefficientPair:
    """(b*, φ*) for the unit-noise variable Y = Λ(X).

    b*(y, r) = Λ'(x)·b(x, r) + ½Λ''(x)·σ(x)²,  φ*(y, z) = φ(x, Λ⁻¹(z)),  x = Λ⁻¹(y)
    """
    if pair.dim != 1 or not pair.time_homogeneous:
        raise LampertiError("the Lambda-transform is implemented for time-homogeneous d = 1 pairs")
    inv = lmap.LambdaInv

    def b_star(t, y, r):
        x = inv(y)
        return lmap.dLambda(x) * pair.b(t, x, r) + 0.5 * lmap.d2Lambda(x) * spec.sigma(x) ** 2

    def phi_star(t, y, z):
        return pair.phi(t, inv(y), inv(z))

    jacobians: Dict[str, Any] = {}
    smooth = pair.flags.smooth and spec.d2sigma is not None
    if smooth:
        def db_dy(t, y, r):
            x = inv(y)
            sigma, dsigma, d2sigma = spec.sigma(x), spec.dsigma(x), spec.d2sigma(x)
            value = -dsigma / sigma * pair.b(t, x, r) - 0.5 * sigma * d2sigma
            return value[..., None] + pair.db_dy(t, x, r)

        def db_dz(t, y, r):
            x = inv(y)
            return pair.db_dz(t, x, r) / spec.sigma(x)[..., None]

        def dphi_dy(t, y, z):
            x = inv(y)
            return pair.dphi_dy(t, x, inv(z)) * spec.sigma(x)[..., None]

        def dphi_dz(t, y, z):
            w = inv(z)
            return pair.dphi_dz(t, inv(y), w) * spec.sigma(w)[..., None]

        jacobians = dict(db_dy=db_dy, db_dz=db_dz, dphi_dy=dphi_dy, dphi_dz=dphi_dz)

    flags = RegularityFlags(**{**pair.flags.model_dump(), "smooth": smooth})
    return CoefficientPair(
        name=f"{pair.name}*{spec.name}",
        dim=1, b=b_star, phi=phi_star, **jacobians,
        growth_constant=None, flags=flags, time_homogeneous=True,
        params={**pair.params, "diffusion": spec.name, "anchor": lmap.anchor},
    )
