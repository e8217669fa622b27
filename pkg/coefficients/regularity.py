"""Randomized probes of the regularity a coefficient pair declares.

The report is advisory: downstream modules trust the declared flags, and a
failed check never modifies the pair.
"""

import logging
from typing import Callable, List, Optional, Tuple
import numpy as np

from config.settings import get_settings
from models.coefficients import CoefficientFn, CoefficientPair, ConditionCheck, RegularityReport

logger = logging.getLogger(__name__)

_PROBE_SCALE = 3.0
_FD_STEP = 1e-5
_FD_RTOL = 1e-4


def _norm(v: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.atleast_1d(v), axis=-1)


def _linear_growth(pair: CoefficientPair, t: np.ndarray, y: np.ndarray, z: np.ndarray) -> ConditionCheck:
    scale = 1.0 + _norm(y) + _norm(z)
    ratios: List[Tuple[str, np.ndarray]] = []
    for label, fn in (("b", pair.b), ("phi", pair.phi)):
        values = np.stack([fn(float(t[i]), y[i], z[i]) for i in range(len(t))])
        ratios.append((label, _norm(values) / scale))

    label, worst = max(ratios, key=lambda item: float(np.max(item[1])))
    i = int(np.argmax(worst))
    worst_value = float(worst[i])
    declared = pair.growth_constant is not None
    passed = not declared or worst_value <= pair.growth_constant * (1.0 + 1e-9)
    return ConditionCheck(
        name="linear_growth",
        declared=declared,
        passed=passed,
        worst_value=worst_value,
        witness={"coefficient": label, "t": float(t[i]), "y": y[i].tolist(), "z": z[i].tolist()},
        detail=None if declared else "no growth constant declared",
    )


def _steepest_quotient(fn: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray,
                       depth: int, ceiling: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bisect each segment [lo, hi] towards its steeper half.

    Returns the final quotients and brackets. A segment stops shrinking once
    its quotient exceeds the ceiling.
    """
    lo, hi = lo.copy(), hi.copy()
    f_lo, f_hi = np.array(fn(lo), dtype=float), np.array(fn(hi), dtype=float)
    quotient = _norm(f_hi - f_lo) / _norm(hi - lo)
    for _ in range(depth):
        active = quotient <= ceiling
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        width = 0.5 * _norm(hi - lo)
        q_left = _norm(f_mid - f_lo) / width
        q_right = _norm(f_hi - f_mid) / width
        go_left = (q_left >= q_right) & active
        go_right = (q_left < q_right) & active

        hi[go_left], f_hi[go_left] = mid[go_left], f_mid[go_left]
        lo[go_right], f_lo[go_right] = mid[go_right], f_mid[go_right]
        quotient = np.where(active, np.maximum(q_left, q_right), quotient)
    return quotient, lo, hi


def _lipschitz(name: str, declared: bool, fn: CoefficientFn, in_z: bool, t: float,
               fixed: np.ndarray, lo: np.ndarray, hi: np.ndarray,
               depth: int, ceiling: float) -> ConditionCheck:
    if in_z:
        section = lambda v: fn(t, fixed, v)
    else:
        section = lambda v: fn(t, v, fixed)
    quotient, q_lo, q_hi = _steepest_quotient(section, lo, hi, depth, ceiling)
    i = int(np.argmax(quotient))
    worst_value = float(quotient[i])
    passed = not declared or worst_value <= ceiling
    variable = "z" if in_z else "y"
    return ConditionCheck(
        name=name,
        declared=declared,
        passed=passed,
        worst_value=worst_value,
        witness={"t": t, "fixed": fixed[i].tolist(), f"{variable}_lo": q_lo[i].tolist(),
                 f"{variable}_hi": q_hi[i].tolist()},
        detail=f"difference quotient in {variable} exceeds {ceiling:g}" if worst_value > ceiling else None,
    )


def _phi_y_independence(pair: CoefficientPair, t: float, y1: np.ndarray, y2: np.ndarray,
                        z: np.ndarray) -> ConditionCheck:
    p1, p2 = pair.phi(t, y1, z), pair.phi(t, y2, z)
    gap = _norm(p1 - p2) / (1.0 + _norm(p1))
    i = int(np.argmax(gap))
    declared = pair.flags.phi_y_independent
    return ConditionCheck(
        name="phi_y_independent",
        declared=declared,
        passed=not declared or float(gap[i]) <= 1e-12,
        worst_value=float(gap[i]),
        witness={"t": t, "y1": y1[i].tolist(), "y2": y2[i].tolist(), "z": z[i].tolist()},
    )


def _central_difference(fn: CoefficientFn, t: float, y: np.ndarray, z: np.ndarray, wrt_z: bool) -> np.ndarray:
    d = y.shape[-1]
    columns = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = _FD_STEP
        if wrt_z:
            columns.append((fn(t, y, z + e) - fn(t, y, z - e)) / (2.0 * _FD_STEP))
        else:
            columns.append((fn(t, y + e, z) - fn(t, y - e, z)) / (2.0 * _FD_STEP))
    return np.stack(columns, axis=-1)


def _jacobian_consistency(pair: CoefficientPair, t: float, y: np.ndarray, z: np.ndarray) -> ConditionCheck:
    declared = pair.flags.smooth
    if not pair.has_jacobians():
        return ConditionCheck(name="jacobian_consistency", declared=declared, passed=not declared,
                              detail="Jacobians not supplied")

    worst_value, witness = 0.0, {}
    for label, fn, jac, wrt_z in (
        ("db_dy", pair.b, pair.db_dy, False),
        ("db_dz", pair.b, pair.db_dz, True),
        ("dphi_dy", pair.phi, pair.dphi_dy, False),
        ("dphi_dz", pair.phi, pair.dphi_dz, True),
    ):
        fd = _central_difference(fn, t, y, z, wrt_z)
        declared_jac = np.asarray(jac(t, y, z), dtype=float)
        err = np.abs(declared_jac - fd) / np.maximum(np.abs(fd), 1e-6)
        per_probe = err.reshape(err.shape[0], -1).max(axis=1)
        i = int(np.argmax(per_probe))
        if per_probe[i] > worst_value:
            worst_value = float(per_probe[i])
            witness = {"jacobian": label, "t": t, "y": y[i].tolist(), "z": z[i].tolist()}

    return ConditionCheck(
        name="jacobian_consistency",
        declared=declared,
        passed=not declared or worst_value <= _FD_RTOL,
        worst_value=worst_value,
        witness=witness,
    )


def probe_regularity(pair: CoefficientPair, probes: Optional[int] = None, seed: int = 0) -> RegularityReport:
    """Check declared growth, Lipschitz, y-independence and Jacobian claims on random probes."""
    numerics = get_settings().numerics
    probes = probes or numerics.regularity_probes
    if probes < 1:
        raise ValueError("probes must be >= 1")
    rng = np.random.default_rng(seed)
    d = pair.dim
    t_all = rng.uniform(0.0, 1.0, size=probes)
    y = rng.normal(scale=_PROBE_SCALE, size=(probes, d))
    z = rng.normal(scale=_PROBE_SCALE, size=(probes, d))
    z2 = rng.normal(scale=_PROBE_SCALE, size=(probes, d))
    y2 = rng.normal(scale=_PROBE_SCALE, size=(probes, d))
    t = float(t_all[0])

    depth, ceiling = numerics.bisection_depth, numerics.lipschitz_ceiling
    flags = pair.flags
    checks = [
        _linear_growth(pair, t_all, y, z),
        _lipschitz("lipschitz_z_b", flags.lipschitz_z_b, pair.b, True, t, y, z, z2, depth, ceiling),
        _lipschitz("lipschitz_z_phi", flags.lipschitz_z_phi, pair.phi, True, t, y, z, z2, depth, ceiling),
        _lipschitz("lipschitz_y_phi", flags.lipschitz_y_phi, pair.phi, False, t, z, y, y2, depth, ceiling),
        _phi_y_independence(pair, t, y, y2, z),
        _jacobian_consistency(pair, t, y, z),
    ]
    report = RegularityReport(pair_name=pair.name, probes=probes, seed=seed, checks=checks)
    for check in report.checks:
        if not check.passed:
            logger.warning("%s: declared %s failed (worst %.6g at %s)",
                           pair.name, check.name, check.worst_value, check.witness)
    return report


def continuity_modulus(fn: CoefficientFn, t: float, y: np.ndarray, z: np.ndarray,
                       delta: float, resolution: int = 33) -> np.ndarray:
    """Per-probe sup of ‖fn(t, y, z') − fn(t, y, z)‖ over ‖z' − z‖_∞ ≤ delta along each axis."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    base = fn(t, y, z)
    offsets = np.linspace(-delta, delta, resolution)
    modulus = np.zeros(z.shape[0])
    for j in range(z.shape[1]):
        for step in offsets:
            shifted = z.copy()
            shifted[:, j] += step
            modulus = np.maximum(modulus, _norm(fn(t, y, shifted) - base))
    return modulus

