from .coefficients import CoefficientPair, RegularityFlags, MollifierConfig, ConditionCheck, RegularityReport
from .measure import EmpiricalMeasure
from .ensemble import TimeGrid, PathEnsemble, LawFlow, PicardResult, HoelderRow, HoelderReport
from .sensitivity import (
    TangentEnsemble,
    MalliavinFactor,
    RelationReport,
    Payoff,
    WeightSchedule,
    DeltaEstimate,
    AdmissibilityReport
)
from .oracle import OracleSolution, CaratheodoryResult
from .lamperti import DiffusionSpec, LampertiMap
from .experiment import ExperimentConfig, SUBCOMMANDS

__all__ = [
    "CoefficientPair", "RegularityFlags", "MollifierConfig", "ConditionCheck", "RegularityReport",
    "EmpiricalMeasure",
    "TimeGrid", "PathEnsemble", "LawFlow", "PicardResult", "HoelderRow", "HoelderReport",
    "TangentEnsemble", "MalliavinFactor", "RelationReport", "Payoff", "WeightSchedule",
    "DeltaEstimate", "AdmissibilityReport",
    "OracleSolution", "CaratheodoryResult",
    "DiffusionSpec", "LampertiMap",
    "ExperimentConfig", "SUBCOMMANDS"
]
