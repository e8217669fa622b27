"""Tangent particles, Malliavin factors, payoffs and delta estimates."""

from typing import Callable, List, Literal, Optional
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.ensemble import TimeGrid

EstimatorName = Literal["bel", "pathwise", "central_fd"]


class TangentEnsemble(BaseModel):
    """First variation J[i, k] = ∂x X^i_{t_k}, shape (N, M+1)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    J: np.ndarray
    ensemble_fingerprint: str

    @model_validator(mode='after')
    def validate_tangent(self):
        if self.J.ndim != 2 or self.J.shape[1] != self.grid.steps + 1:
            raise ValueError(f"J must have shape (N, {self.grid.steps + 1}), got {self.J.shape}")
        if not np.all(self.J[:, 0] == 1.0):
            raise ValueError("tangent must start at 1")
        return self

    @property
    def terminal(self) -> np.ndarray:
        return self.J[:, -1]


class MalliavinFactor(BaseModel):
    """Per-particle log-increments g_k·Δ of D_s X_t, reconstructed by prefix sums.

    log D_{s}X_{t} = prefix[:, t] - prefix[:, s] for grid indices s <= t.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    log_increments: np.ndarray
    prefix: np.ndarray
    ensemble_fingerprint: str

    @classmethod
    def from_increments(cls, grid: TimeGrid, log_increments: np.ndarray, fingerprint: str) -> "MalliavinFactor":
        prefix = np.zeros((log_increments.shape[0], grid.steps + 1))
        np.cumsum(log_increments, axis=1, out=prefix[:, 1:])
        return cls(grid=grid, log_increments=log_increments, prefix=prefix, ensemble_fingerprint=fingerprint)

    def log_d(self, s: int, t: int) -> np.ndarray:
        if not 0 <= s <= t <= self.grid.steps:
            raise ValueError(f"need 0 <= s <= t <= M, got s={s}, t={t}")
        if s == t:
            return np.zeros(self.log_increments.shape[0])
        return self.prefix[:, t] - self.prefix[:, s]

    def d(self, s: int, t: int) -> np.ndarray:
        return np.exp(self.log_d(s, t))


class RelationReport(BaseModel):
    s_index: int
    max_residual: float
    residual_by_time: List[float] = Field(default_factory=list)


class Payoff(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = "custom"
    Phi: Callable[[np.ndarray], np.ndarray]
    dPhi: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lipschitz: bool = False
    bounded: bool = False
    epsilon: float = Field(default=0.5, gt=0.0)

    @property
    def weighted_norm_exponent(self) -> float:
        """2p with p = (1 + ε) / ε."""
        return 2.0 * (1.0 + self.epsilon) / self.epsilon


class WeightSchedule(BaseModel):
    """Deterministic weight a(s) stored as cell averages on the grid, integrating to one."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    grid: TimeGrid
    a: Callable[[np.ndarray], np.ndarray]
    cell_values: np.ndarray
    integral_check: float

    @field_validator('integral_check')
    @classmethod
    def validate_integral(cls, v: float) -> float:
        if abs(v - 1.0) > 1e-10:
            raise ValueError(f"weight schedule integrates to {v}, expected 1")
        return v

    @property
    def cumulative(self) -> np.ndarray:
        """A_k = Σ_{l ≤ k} a_l·Δ = ∫_0^{t_{k+1}} a(u) du for k = 0..M-1; A_{M-1} = 1."""
        return np.cumsum(self.cell_values * self.grid.dt)


class DeltaEstimate(BaseModel):
    value: float
    std_error: float = Field(..., ge=0.0)
    n_samples: int = Field(..., ge=1)
    method: EstimatorName
    config_digest: str = ""
    notes: List[str] = Field(default_factory=list)

    @field_validator('value')
    @classmethod
    def validate_value(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError("delta estimate must be finite")
        return v

    def agrees_with(self, other: "DeltaEstimate", n_sigma: float = 3.0, allowance: float = 0.0) -> bool:
        combined = float(np.hypot(self.std_error, other.std_error))
        return abs(self.value - other.value) <= n_sigma * combined + allowance


class AdmissibilityReport(BaseModel):
    payoff_name: str
    horizon: float
    exponent: float
    quad_points: int
    value: float
    log_value: Optional[float] = None
    finite: bool
    detail: Optional[str] = None
