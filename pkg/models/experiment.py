"""Experiment configuration consumed by the `mfsde` runner (YAML, see README.md)."""

import hashlib
import json
from typing import Any, Dict, List, Literal, Optional, Union
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config.settings import get_settings
from models.coefficients import MODEL_PARAMS
from models.sensitivity import EstimatorName

Subcommand = Literal["simulate", "delta", "picard", "ode", "hoelder", "lamperti-check", "converge"]
SUBCOMMANDS = ("simulate", "delta", "picard", "ode", "hoelder", "lamperti-check", "converge")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSection(_Section):
    id: str
    params: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode='after')
    def validate_params(self):
        schema = MODEL_PARAMS.get(self.id)
        if schema is None:
            raise ValueError(f"unknown model '{self.id}'; must be one of {sorted(MODEL_PARAMS)}")
        try:
            schema.model_validate(self.params)
        except ValidationError as e:
            details = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
            raise ValueError(f"invalid parameters for model '{self.id}': {details}") from None
        return self


class GridSection(_Section):
    T: float = Field(..., gt=0.0)
    steps: int = Field(..., ge=1, le=1_000_000)


class PayoffSection(_Section):
    id: str = "identity"
    params: Dict[str, float] = Field(default_factory=dict)
    epsilon: float = Field(default_factory=lambda: get_settings().numerics.bel_epsilon, gt=0.0)


class MollifySection(_Section):
    bandwidth: float = Field(..., gt=0.0)
    quadrature_order: int = Field(default_factory=lambda: get_settings().numerics.mollifier_quadrature_order, ge=2, le=64)


class PicardSection(_Section):
    max_iter: int = Field(default=20, ge=1, le=10_000)
    tol: float = Field(default=1e-3, gt=0.0)


class FiniteDifferenceSection(_Section):
    h: float = Field(default_factory=lambda: get_settings().numerics.fd_step, gt=0.0)


class BelSection(_Section):
    mean_field_argument: Literal["solution", "brownian"] = "solution"


class HoelderSection(_Section):
    xs: List[float] = Field(default_factory=lambda: [0.0, 1.0], min_length=2)
    time_points: Optional[List[int]] = None


class DiffusionSection(_Section):
    id: str = "sqrt_quadratic"
    params: Dict[str, float] = Field(default_factory=dict)


class LampertiSection(_Section):
    diffusion: DiffusionSection = Field(default_factory=DiffusionSection)
    anchor: float = 0.0
    steps: List[int] = Field(default_factory=lambda: [128, 256], min_length=1)
    w1_tolerance: float = Field(default=0.05, gt=0.0)
    residual_tolerance: float = Field(default=1e-8, gt=0.0)


class OdeSection(_Section):
    rk4_steps: int = Field(default_factory=lambda: get_settings().numerics.rk4_steps, ge=10)


class ConvergeSection(_Section):
    parameter: Literal["steps", "particles"] = "steps"
    values: List[int] = Field(default_factory=lambda: [64, 128, 256, 512], min_length=2)

    @field_validator('values')
    @classmethod
    def validate_values(cls, v: List[int]) -> List[int]:
        if any(x < 1 for x in v) or sorted(v) != v:
            raise ValueError("converge values must be positive and increasing")
        return v


class CheckSection(_Section):
    n_sigma: float = Field(default=3.0, gt=0.0)
    bias_steps: float = Field(default=2.0, ge=0.0)
    w1_tolerance: float = Field(default=0.03, gt=0.0)


class ExperimentConfig(_Section):
    model: ModelSection
    grid: GridSection
    particles: int = Field(..., ge=2, le=10_000_000)
    x0: Union[float, List[float]] = 0.0
    seed: int = Field(default=0, ge=0)
    payoff: PayoffSection = Field(default_factory=PayoffSection)
    weight_schedule: Literal["uniform", "linear"] = "uniform"
    estimators: List[EstimatorName] = Field(default_factory=lambda: ["bel", "pathwise", "central_fd"])
    mollify: Optional[MollifySection] = None
    picard: PicardSection = Field(default_factory=PicardSection)
    fd: FiniteDifferenceSection = Field(default_factory=FiniteDifferenceSection)
    bel: BelSection = Field(default_factory=BelSection)
    hoelder: HoelderSection = Field(default_factory=HoelderSection)
    lamperti: LampertiSection = Field(default_factory=LampertiSection)
    ode: OdeSection = Field(default_factory=OdeSection)
    converge: ConvergeSection = Field(default_factory=ConvergeSection)
    check: CheckSection = Field(default_factory=CheckSection)
    output: str = "results"

    @model_validator(mode='after')
    def validate_estimators(self):
        if len(set(self.estimators)) != len(self.estimators):
            raise ValueError("estimators must not repeat")
        return self

    @model_validator(mode='after')
    def validate_scalar_state(self):
        if isinstance(self.x0, list) and len(self.x0) != 1:
            raise ValueError(f"x0 must be a scalar or a one-element list, got {len(self.x0)} entries")
        return self

    @model_validator(mode='after')
    def validate_hoelder_times(self):
        points = self.hoelder.time_points
        if points is not None and any(k < 0 or k > self.grid.steps for k in points):
            raise ValueError(f"hoelder time points must lie in 0..{self.grid.steps}")
        return self

    @property
    def x0_value(self) -> float:
        return float(self.x0[0]) if isinstance(self.x0, list) else float(self.x0)

    def digest(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()
