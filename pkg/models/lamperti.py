from typing import Callable, Optional, Tuple
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

ScalarFn = Callable[[np.ndarray], np.ndarray]


class DiffusionSpec(BaseModel):
    """Time-homogeneous volatility σ on an open interval, σ > 0."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = "custom"
    sigma: ScalarFn
    dsigma: ScalarFn
    d2sigma: Optional[ScalarFn] = None
    domain: Tuple[float, float] = (-np.inf, np.inf)
    constant: Optional[float] = Field(default=None, gt=0.0)

    @field_validator('domain')
    @classmethod
    def validate_domain(cls, v):
        lo, hi = v
        if not lo < hi:
            raise ValueError(f"domain must be an open interval (lo < hi), got {v}")
        return v

    def contains(self, y: np.ndarray) -> np.ndarray:
        lo, hi = self.domain
        return (y > lo) & (y < hi)


class LampertiMap(BaseModel):
    """Λ with Λ'σ = 1, anchored at Λ(anchor) = 0, with its inverse and derivatives."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    Lambda: ScalarFn
    LambdaInv: ScalarFn
    dLambda: ScalarFn
    d2Lambda: ScalarFn
    anchor: float
    inverse_lipschitz: float = Field(..., gt=0.0)
