from .direct import round_trip, simulate_direct
from .transform import BUILTIN_DIFFUSIONS, build_map, lambda_residual, make_diffusion, transform_pair

__all__ = [
    "build_map", "transform_pair", "make_diffusion", "lambda_residual", "BUILTIN_DIFFUSIONS",
    "simulate_direct", "round_trip",
]
