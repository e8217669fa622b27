from typing import Any, Dict, Optional


class MFSDEError(Exception):
    exit_code: int = 1

    def to_record(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "exit_code": self.exit_code, "message": str(self)}


class ConfigError(MFSDEError):
    exit_code = 2


class NumericalError(MFSDEError):
    exit_code = 3


class OracleMismatchError(MFSDEError):
    exit_code = 4


class CoefficientError(MFSDEError, ValueError):
    exit_code = 2


class MeasureError(MFSDEError, ValueError):
    exit_code = 3


class SensitivityError(MFSDEError, ValueError):
    exit_code = 3


class PayoffError(MFSDEError, ValueError):
    exit_code = 3


class SimulationError(NumericalError):
    """Non-finite state or tangent, located by step and particle."""

    def __init__(self, message: str, step: Optional[int] = None, particle: Optional[int] = None):
        super().__init__(message)
        self.step = step
        self.particle = particle

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        record.update({"step": self.step, "particle": self.particle})
        return record


class MollifierError(NumericalError):
    def __init__(self, message: str, probe: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.probe = probe or {}


class OracleError(NumericalError):
    pass


class LampertiError(NumericalError):
    pass
