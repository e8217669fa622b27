from typing import Literal, Optional
import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from models.ensemble import TimeGrid


class OracleSolution(BaseModel):
    """Reference mean/variance (and optionally tangent) curves on an engine grid."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    mean: np.ndarray
    variance: np.ndarray
    tangent: Optional[np.ndarray] = None
    law_family: Literal["gaussian", "deterministic_mean_only"] = "gaussian"

    @model_validator(mode='after')
    def validate_curves(self):
        size = self.grid.steps + 1
        for name in ("mean", "variance", "tangent"):
            arr = getattr(self, name)
            if arr is not None and arr.shape != (size,):
                raise ValueError(f"{name} must have shape ({size},), got {arr.shape}")
        if np.any(self.variance < 0.0):
            raise ValueError("variance must be nonnegative")
        return self

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)


class CaratheodoryResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    mc_curve: np.ndarray
    rk4_curve: np.ndarray
    max_abs_gap: float
