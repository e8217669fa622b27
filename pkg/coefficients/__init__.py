from .builtins import BUILTIN_MODELS, make_builtin
from .mollifier import mollify, piecewise_gauss_rule
from .regularity import continuity_modulus, probe_regularity

__all__ = [
    "BUILTIN_MODELS", "make_builtin",
    "mollify", "piecewise_gauss_rule",
    "probe_regularity", "continuity_modulus",
]
