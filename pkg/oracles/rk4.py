"""Classical fourth-order Runge–Kutta for scalar ODEs, sampled on given nodes."""

import math
from typing import Callable
import numpy as np

from utils.errors import OracleError

Rate = Callable[[float, float], float]


def rk4_on_nodes(rate: Rate, y0: float, nodes: np.ndarray, substeps: int) -> np.ndarray:
    """Integrate y' = rate(x, y) from nodes[0], with `substeps` uniform steps per interval."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    values = np.empty(len(nodes))
    values[0] = y = float(y0)
    for k in range(len(nodes) - 1):
        x, h = float(nodes[k]), (float(nodes[k + 1]) - float(nodes[k])) / substeps
        for j in range(substeps):
            xj = x + j * h
            k1 = rate(xj, y)
            k2 = rate(xj + 0.5 * h, y + 0.5 * h * k1)
            k3 = rate(xj + 0.5 * h, y + 0.5 * h * k2)
            k4 = rate(xj + h, y + h * k3)
            y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not math.isfinite(y):
            raise OracleError(f"RK4 produced a non-finite value on interval {k}")
        values[k + 1] = y
    return values


def substeps_for(total_steps: int, intervals: int) -> int:
    return max(1, math.ceil(total_steps / intervals))


def richardson_gap(rate: Rate, y0: float, nodes: np.ndarray, total_steps: int) -> float:
    """Sup-norm change of the curve when the RK4 step count doubles."""
    intervals = len(nodes) - 1
    coarse = rk4_on_nodes(rate, y0, nodes, substeps_for(total_steps, intervals))
    fine = rk4_on_nodes(rate, y0, nodes, substeps_for(2 * total_steps, intervals))
    return float(np.max(np.abs(coarse - fine)))
