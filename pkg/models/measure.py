import threading
from typing import Optional
import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator


class EmpiricalMeasure(BaseModel):
    """Uniform measure on N particle positions, points of shape (N, d)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: np.ndarray

    _sorted_view: Optional[np.ndarray] = PrivateAttr(default=None)
    _lock: threading.Lock = PrivateAttr(default_factory=threading.Lock)

    @field_validator('points', mode='before')
    @classmethod
    def validate_points(cls, v):
        arr = np.array(v, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError(f"points must be a non-empty (N, d) array, got shape {arr.shape}")
        arr.flags.writeable = False
        return arr

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def sorted_view(self) -> np.ndarray:
        """Stable ascending permutation of the points (d = 1), built once."""
        if self._sorted_view is None:
            with self._lock:
                if self._sorted_view is None:
                    if self.dim != 1:
                        raise ValueError("sorted_view is defined only for d = 1")
                    order = np.argsort(self.points[:, 0], kind="stable")
                    order.flags.writeable = False
                    self._sorted_view = order
        return self._sorted_view

    @property
    def sorted_points(self) -> np.ndarray:
        return self.points[self.sorted_view, 0]
