from .hoelder import hoelder_probe
from .picard import picard_iterate
from .rng import brownian_increments
from .simulate import simulate

__all__ = ["simulate", "picard_iterate", "hoelder_probe", "brownian_increments"]
