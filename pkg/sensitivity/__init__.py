from .bel import delta_bel, delta_fd, delta_pathwise, validate_payoff
from .malliavin import check_derivative_relation, malliavin_factor
from .payoffs import BUILTIN_PAYOFFS, make_payoff, make_weight_schedule, weight_schedule
from .tangent import dx_rho, propagate_tangent

__all__ = [
    "propagate_tangent", "dx_rho",
    "malliavin_factor", "check_derivative_relation",
    "delta_bel", "delta_pathwise", "delta_fd", "validate_payoff",
    "BUILTIN_PAYOFFS", "make_payoff", "make_weight_schedule", "weight_schedule",
]
