"""Registry of built-in coefficient pairs.

Model identifiers and parameter names are part of the experiment config
contract (see README.md). Parameters are validated by the models in
models/coefficients.py before a pair is built.
"""

import logging
from typing import Any, Callable, Dict, Optional, Tuple, Union
import numpy as np
from pydantic import ValidationError
from scipy.special import expit

from models.coefficients import (
    MODEL_PARAMS,
    CdfDriftParams,
    CoefficientPair,
    CustomTableParams,
    ExpectationDriftParams,
    MeanFieldOUParams,
    ModelParams,
    RegularityFlags,
    SmoothedCdfDriftParams,
    ZeroDriftParams,
)
from utils.errors import CoefficientError

logger = logging.getLogger(__name__)


def _shape(y: np.ndarray, z: np.ndarray) -> tuple:
    return np.broadcast_shapes(np.shape(y), np.shape(z))


def _const(value: float) -> Callable:
    def fn(t, y, z):
        return np.full(_shape(y, z), float(value))
    return fn


def _const_jac(value: float) -> Callable:
    def fn(t, y, z):
        return np.full(_shape(y, z) + (1,), float(value))
    return fn


def _identity_phi(t, y, z):
    return np.broadcast_to(z, _shape(y, z)).astype(float)


def validate_params(model_id: str, params: Union[Dict[str, Any], ModelParams, None]) -> ModelParams:
    """Parse a raw parameter map against the model's schema; CoefficientError on failure."""
    schema = MODEL_PARAMS.get(model_id)
    if schema is None:
        raise CoefficientError(f"Unknown model: {model_id}. Must be one of {sorted(MODEL_PARAMS)}")
    if isinstance(params, schema):
        return params
    try:
        return schema.model_validate(dict(params or {}))
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(map(str, err['loc'])) or model_id}: {err['msg']}" for err in e.errors())
        raise CoefficientError(f"invalid parameters for {model_id}: {details}") from e


def _zero_drift(params: ZeroDriftParams) -> CoefficientPair:
    zero, zero_jac = _const(0.0), _const_jac(0.0)
    return CoefficientPair(
        name="zero_drift", b=zero, phi=zero,
        db_dy=zero_jac, db_dz=zero_jac, dphi_dy=zero_jac, dphi_dz=zero_jac,
        growth_constant=0.0,
        flags=RegularityFlags(lipschitz_z_b=True, lipschitz_z_phi=True, lipschitz_y_phi=True,
                              phi_y_independent=True, smooth=True),
    )


def mean_drift(
    params: Union[Dict[str, Any], ExpectationDriftParams]
) -> Tuple[Callable, Optional[Callable], Optional[float]]:
    """(b_mean, db_mean, growth) of an expectation_drift parameter map."""
    p = validate_params("expectation_drift", params)
    if p.b_mean is not None:
        return p.b_mean, p.db_mean, p.growth_constant
    if p.form == "linear":
        slope, intercept = p.slope, p.intercept
        b_mean = lambda t, m: slope * m + intercept
        db_mean = lambda t, m: np.full(np.shape(m), slope)
        growth = max(abs(slope), abs(intercept), 1.0)
    elif p.form == "cosine":
        amplitude = p.amplitude
        b_mean = lambda t, m: amplitude * np.cos(m)
        db_mean = lambda t, m: -amplitude * np.sin(m)
        growth = max(abs(amplitude), 1.0)
    else:
        b_mean = lambda t, m: np.zeros(np.shape(m))
        db_mean = lambda t, m: np.zeros(np.shape(m))
        growth = 1.0
    if p.growth_constant is not None:
        growth = p.growth_constant
    return b_mean, db_mean, growth


def _expectation_drift(params: ExpectationDriftParams) -> CoefficientPair:
    b_mean, db_mean, growth = mean_drift(params)

    def b(t, y, z):
        return np.broadcast_to(np.asarray(b_mean(t, z), dtype=float), _shape(y, z)).copy()

    smooth = db_mean is not None
    jac: Dict[str, Any] = {}
    if smooth:
        def db_dz(t, y, z):
            return np.broadcast_to(np.asarray(db_mean(t, z), dtype=float), _shape(y, z))[..., None].copy()
        jac = dict(db_dy=_const_jac(0.0), db_dz=db_dz, dphi_dy=_const_jac(0.0), dphi_dz=_const_jac(1.0))

    return CoefficientPair(
        name="expectation_drift", b=b, phi=_identity_phi, **jac,
        growth_constant=None if growth is None else float(growth),
        flags=RegularityFlags(lipschitz_z_b=smooth, lipschitz_z_phi=True, lipschitz_y_phi=True,
                              phi_y_independent=True, smooth=smooth),
        params=params.model_dump(exclude={"b_mean", "db_mean"}, exclude_none=True),
    )


def _mean_field_ou(params: MeanFieldOUParams) -> CoefficientPair:
    a, c = params.a, params.c
    growth = params.growth_constant
    if growth is None:
        growth = max(abs(a), abs(c), 1.0)

    def b(t, y, z):
        return a * y + c * z

    return CoefficientPair(
        name="mean_field_ou", b=b, phi=_identity_phi,
        db_dy=_const_jac(a), db_dz=_const_jac(c), dphi_dy=_const_jac(0.0), dphi_dz=_const_jac(1.0),
        growth_constant=growth,
        flags=RegularityFlags(lipschitz_z_b=True, lipschitz_z_phi=True, lipschitz_y_phi=True,
                              phi_y_independent=True, smooth=True),
        params={"a": a, "c": c},
    )


def _law_as_drift(t, y, z):
    return np.broadcast_to(z, _shape(y, z)).astype(float)


def _cdf_drift(params: CdfDriftParams) -> CoefficientPair:
    u = params.u

    def phi(t, y, z):
        return np.broadcast_to((np.asarray(z) <= u).astype(float), _shape(y, z)).copy()

    return CoefficientPair(
        name="cdf_drift", b=_law_as_drift, phi=phi,
        growth_constant=1.0,
        flags=RegularityFlags(lipschitz_z_b=True, lipschitz_z_phi=False, lipschitz_y_phi=True,
                              phi_y_independent=True, smooth=False),
        params={"u": u},
        kinks={"phi_z": (u,)},
    )


def _smoothed_cdf_drift(params: SmoothedCdfDriftParams) -> CoefficientPair:
    u, width = params.u, params.width

    def phi(t, y, z):
        return np.broadcast_to(expit((u - z) / width), _shape(y, z)).copy()

    def dphi_dz(t, y, z):
        s = expit((z - u) / width)
        return np.broadcast_to(-(s * (1.0 - s)) / width, _shape(y, z))[..., None].copy()

    return CoefficientPair(
        name="smoothed_cdf_drift", b=_law_as_drift, phi=phi,
        db_dy=_const_jac(0.0), db_dz=_const_jac(1.0), dphi_dy=_const_jac(0.0), dphi_dz=dphi_dz,
        growth_constant=1.0,
        flags=RegularityFlags(lipschitz_z_b=True, lipschitz_z_phi=True, lipschitz_y_phi=True,
                              phi_y_independent=True, smooth=True),
        params={"u": u, "width": width},
    )


def _custom_table(params: CustomTableParams) -> CoefficientPair:
    knots = np.asarray(params.knots, dtype=float)
    values = np.asarray(params.values, dtype=float)
    coupling = params.coupling
    slopes = np.diff(values) / np.diff(knots)
    growth = max(float(np.max(np.abs(values))), float(np.max(np.abs(slopes))), abs(coupling), 1.0)

    def b(t, y, z):
        return np.interp(y, knots, values) + coupling * z

    return CoefficientPair(
        name="custom_table", b=b, phi=_identity_phi,
        growth_constant=growth,
        flags=RegularityFlags(lipschitz_z_b=True, lipschitz_z_phi=True, lipschitz_y_phi=True,
                              phi_y_independent=True, smooth=False),
        params={"knots": knots.tolist(), "values": values.tolist(), "coupling": coupling},
        kinks={"b_y": tuple(knots.tolist())},
    )


BUILTIN_MODELS: Dict[str, Callable[[Any], CoefficientPair]] = {
    "zero_drift": _zero_drift,
    "expectation_drift": _expectation_drift,
    "mean_field_ou": _mean_field_ou,
    "cdf_drift": _cdf_drift,
    "smoothed_cdf_drift": _smoothed_cdf_drift,
    "custom_table": _custom_table,
}


def make_builtin(model_id: str, params: Optional[Dict[str, Any]] = None) -> CoefficientPair:
    builder = BUILTIN_MODELS.get(model_id)
    if builder is None:
        raise CoefficientError(f"Unknown model: {model_id}. Must be one of {sorted(BUILTIN_MODELS)}")
    pair = builder(validate_params(model_id, params))
    logger.debug("built coefficient pair %s with params %s", model_id, pair.params)
    return pair
