from .caratheodory import caratheodory_solve
from .cdf_drift import cdf_drift_fixture, cdf_drift_oracle, cdf_drift_rate
from .ou import ou_oracle
from .rk4 import richardson_gap, rk4_on_nodes

__all__ = [
    "ou_oracle", "cdf_drift_oracle", "cdf_drift_fixture", "cdf_drift_rate",
    "caratheodory_solve", "rk4_on_nodes", "richardson_gap",
]
