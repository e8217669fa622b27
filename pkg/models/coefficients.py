"""Coefficient pair (b, φ) with regularity metadata and mollifier settings."""

from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, Type
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.settings import get_settings

CoefficientFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
KINK_KEYS = frozenset({"b_y", "b_z", "phi_y", "phi_z"})


class RegularityFlags(BaseModel):
    model_config = ConfigDict(frozen=True)

    lipschitz_z_b: bool = False
    lipschitz_z_phi: bool = False
    lipschitz_y_phi: bool = False
    phi_y_independent: bool = False
    smooth: bool = False


class CoefficientPair(BaseModel):
    """Drift b(t, y, z) and law functional φ(t, y, z).

    All callables are vectorized: y and z have shape (..., d) and the result
    has shape (..., d); Jacobians return (..., d, d).
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = Field(default="custom", min_length=1)
    dim: int = Field(default=1, ge=1)
    b: CoefficientFn
    phi: CoefficientFn
    db_dy: Optional[CoefficientFn] = None
    db_dz: Optional[CoefficientFn] = None
    dphi_dy: Optional[CoefficientFn] = None
    dphi_dz: Optional[CoefficientFn] = None
    growth_constant: Optional[float] = Field(default=None, ge=0.0)
    flags: RegularityFlags = Field(default_factory=RegularityFlags)
    time_homogeneous: bool = True
    params: Dict[str, Any] = Field(default_factory=dict)
    # coordinates where a coefficient jumps or kinks, keyed "b_y", "b_z", "phi_y", "phi_z"
    kinks: Dict[str, Tuple[float, ...]] = Field(default_factory=dict)

    @field_validator('kinks')
    @classmethod
    def validate_kinks(cls, v: Dict[str, Tuple[float, ...]]) -> Dict[str, Tuple[float, ...]]:
        unknown = set(v) - KINK_KEYS
        if unknown:
            raise ValueError(f"unknown kink keys {sorted(unknown)}; use {sorted(KINK_KEYS)}")
        return {k: tuple(sorted(points)) for k, points in v.items()}

    @model_validator(mode='after')
    def validate_smooth_jacobians(self):
        if self.flags.smooth:
            missing = [n for n in ("db_dy", "db_dz", "dphi_dy", "dphi_dz") if getattr(self, n) is None]
            if missing:
                raise ValueError(f"smooth pair '{self.name}' is missing Jacobians: {missing}")
        return self

    def has_jacobians(self) -> bool:
        return all(getattr(self, n) is not None for n in ("db_dy", "db_dz", "dphi_dy", "dphi_dz"))


class MollifierConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    bandwidth: float = Field(..., gt=0.0)
    quadrature_order: int = Field(default_factory=lambda: get_settings().numerics.mollifier_quadrature_order, ge=2, le=64)
    kernel: str = Field(default="gaussian", pattern="^gaussian$")


class ConditionCheck(BaseModel):
    name: str
    declared: bool
    passed: bool
    worst_value: float = 0.0
    witness: Dict[str, Any] = Field(default_factory=dict)
    detail: Optional[str] = None


class RegularityReport(BaseModel):
    pair_name: str
    probes: int
    seed: int
    checks: List[ConditionCheck] = Field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> ConditionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


class ModelParams(BaseModel):
    """Parameters of a built-in model; unknown keys are rejected."""
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class ZeroDriftParams(ModelParams):
    pass


class ExpectationDriftParams(ModelParams):
    """b = b_mean(t, z) with φ = z. A callable b_mean overrides `form`."""
    form: Literal["linear", "cosine", "zero"] = "linear"
    slope: float = 0.0
    intercept: float = 0.0
    amplitude: float = 1.0
    b_mean: Optional[Callable[..., Any]] = None
    db_mean: Optional[Callable[..., Any]] = None
    growth_constant: Optional[float] = Field(default=None, ge=0.0)


class MeanFieldOUParams(ModelParams):
    a: float
    c: float
    growth_constant: Optional[float] = Field(default=None, ge=0.0)


class CdfDriftParams(ModelParams):
    u: float = 0.0


class SmoothedCdfDriftParams(CdfDriftParams):
    width: float = Field(..., gt=0.0)


class CustomTableParams(ModelParams):
    knots: List[float] = Field(..., min_length=2)
    values: List[float] = Field(..., min_length=2)
    coupling: float = 0.0

    @model_validator(mode='after')
    def validate_table(self):
        if len(self.knots) != len(self.values):
            raise ValueError("knots and values must have equal length")
        if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
            raise ValueError("knots must be strictly increasing")
        return self


MODEL_PARAMS: Dict[str, Type[ModelParams]] = {
    "zero_drift": ZeroDriftParams,
    "expectation_drift": ExpectationDriftParams,
    "mean_field_ou": MeanFieldOUParams,
    "cdf_drift": CdfDriftParams,
    "smoothed_cdf_drift": SmoothedCdfDriftParams,
    "custom_table": CustomTableParams,
}
