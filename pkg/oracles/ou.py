import numpy as np

from models.ensemble import TimeGrid
from models.oracle import OracleSolution


def ou_oracle(a: float, c: float, x0: float, grid: TimeGrid) -> OracleSolution:
    """Closed-form law of dX = (aX + cE[X])dt + dB: Gaussian with mean x0·e^{(a+c)t}."""
    t = grid.times
    growth = np.exp((a + c) * t)
    variance = t.copy() if a == 0.0 else np.expm1(2.0 * a * t) / (2.0 * a)
    return OracleSolution(grid=grid, mean=x0 * growth, variance=variance, tangent=growth.copy(),
                          law_family="gaussian")
