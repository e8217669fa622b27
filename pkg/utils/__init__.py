from .csv_storage import load_results_csv, resolve_output_dir, save_results_csv
from .errors import (
    MFSDEError,
    ConfigError,
    NumericalError,
    OracleMismatchError,
    CoefficientError,
    MeasureError,
    SensitivityError,
    PayoffError,
    SimulationError,
    MollifierError,
    OracleError,
    LampertiError
)

__all__ = [
    'save_results_csv', 'load_results_csv', 'resolve_output_dir',
    'MFSDEError', 'ConfigError', 'NumericalError', 'OracleMismatchError',
    'CoefficientError', 'MeasureError', 'SensitivityError', 'PayoffError',
    'SimulationError', 'MollifierError', 'OracleError', 'LampertiError'
]
