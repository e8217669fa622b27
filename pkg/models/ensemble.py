"""Time grid, particle ensembles and law flows."""

import hashlib
from typing import List, Literal, Optional
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.coefficients import CoefficientPair
from models.measure import EmpiricalMeasure


class TimeGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    T: float = Field(..., gt=0.0)
    steps: int = Field(..., ge=1)
    t0: float = Field(default=0.0)

    @field_validator('t0')
    @classmethod
    def validate_origin(cls, v: float) -> float:
        if v != 0.0:
            raise ValueError("time grids start at t0 = 0")
        return v

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def times(self) -> np.ndarray:
        times = np.arange(self.steps + 1, dtype=float) * self.dt
        times[-1] = self.T
        return times


class PathEnsemble(BaseModel):
    """N particle trajectories with the Brownian increments and law integrals that produced them.

    states: (N, M+1, d), dW: (N, M, d), rho: (N, M, d) where rho[i, k] is the
    law integral fed to b at step k.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    n_particles: int = Field(..., ge=2)
    x0: np.ndarray
    states: np.ndarray
    dW: np.ndarray
    rho: np.ndarray
    seed: int
    scheme_tag: Literal["interacting", "frozen_law"] = "interacting"
    fingerprint: str = ""

    @model_validator(mode='after')
    def validate_shapes(self):
        n, m, d = self.n_particles, self.grid.steps, self.x0.shape[0]
        if self.states.shape != (n, m + 1, d):
            raise ValueError(f"states shape {self.states.shape} != {(n, m + 1, d)}")
        if self.dW.shape != (n, m, d) or self.rho.shape != (n, m, d):
            raise ValueError("dW and rho must have shape (N, M, d)")
        return self

    @property
    def dim(self) -> int:
        return self.x0.shape[0]

    @property
    def terminal(self) -> np.ndarray:
        return self.states[:, -1, :]

    def snapshot(self, k: int) -> EmpiricalMeasure:
        return EmpiricalMeasure(points=self.states[:, k, :])

    def law_flow(self) -> "LawFlow":
        return LawFlow(grid=self.grid, snapshots=[self.snapshot(k) for k in range(self.grid.steps + 1)])

    def drift(self, pair: CoefficientPair) -> np.ndarray:
        """Recompute the drift evaluations b(t_k, X_k, rho_k), shape (N, M, d)."""
        times = self.grid.times
        return np.stack(
            [pair.b(float(times[k]), self.states[:, k, :], self.rho[:, k, :]) for k in range(self.grid.steps)],
            axis=1,
        )


def ensemble_fingerprint(pair_name: str, grid: TimeGrid, n_particles: int, x0: np.ndarray,
                         seed: int, scheme_tag: str, noise: Optional[np.ndarray] = None) -> str:
    """Short hash of the run inputs; `noise` is hashed when the increments did not come from `seed`."""
    payload = f"{pair_name}|{grid.T!r}|{grid.steps}|{n_particles}|{np.asarray(x0).tolist()!r}|{seed}|{scheme_tag}"
    if noise is not None:
        payload += "|dW=" + hashlib.sha256(np.ascontiguousarray(noise, dtype=float).tobytes()).hexdigest()
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class LawFlow(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    snapshots: List[EmpiricalMeasure]

    @model_validator(mode='after')
    def validate_snapshots(self):
        if len(self.snapshots) != self.grid.steps + 1:
            raise ValueError("snapshot count must equal the grid size")
        sizes = {s.size for s in self.snapshots}
        if len(sizes) != 1:
            raise ValueError("all snapshots must have the same particle count")
        return self

    @classmethod
    def from_states(cls, grid: TimeGrid, states: np.ndarray) -> "LawFlow":
        return cls(grid=grid, snapshots=[EmpiricalMeasure(points=states[:, k, :]) for k in range(grid.steps + 1)])


class PicardResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    ensemble: PathEnsemble
    law_flow: LawFlow
    iterations: int
    history: List[float]
    converged: bool


class HoelderRow(BaseModel):
    pair_id: str
    t: float
    s: float
    x: List[float]
    y: List[float]
    lhs: float
    rhs_unit: float

    @property
    def ratio(self) -> Optional[float]:
        return self.lhs / self.rhs_unit if self.rhs_unit > 0 else None


class HoelderReport(BaseModel):
    rows: List[HoelderRow] = Field(default_factory=list)
    constant: float = Field(default=0.0, ge=0.0)
