from typing import TypedDict, Optional, List, Dict, Any
from pydantic import BaseModel, Field, field_validator

from models.experiment import SUBCOMMANDS


class ExperimentState(TypedDict, total=False):

    subcommand: str

    config_path: str

    options: Dict[str, Any]
    """Runner flags: {workers, check, timestamp, output}"""

    config: Optional[Any]
    """Validated ExperimentConfig once load_config has run"""

    output: Optional[Any]
    """PipelineOutput: {frame, checks, always_check}"""

    failed_checks: List[Dict[str, Any]]

    csv_path: Optional[str]

    current_step: str
    """Current runner stage: 'load_config', 'run_pipeline', 'check_results', 'write_csv', 'done'"""

    error: Optional[str]

    error_record: Optional[Dict[str, Any]]
    """One-line JSON record printed to stderr: {error, exit_code, message, ...}"""

    exit_code: int


class RunOptions(BaseModel):

    workers: Optional[int] = Field(default=None, ge=1, le=256)
    check: bool = False
    timestamp: bool = True
    output: Optional[str] = None


class ExperimentStateValidator(BaseModel):

    subcommand: str
    config_path: str
    options: RunOptions = Field(default_factory=RunOptions)
    current_step: str = Field(default="load_config")
    error: Optional[str] = None
    exit_code: int = 0

    @field_validator('subcommand')
    @classmethod
    def validate_subcommand(cls, v: str) -> str:
        if v not in SUBCOMMANDS:
            raise ValueError(f"Invalid subcommand: {v}. Must be one of {SUBCOMMANDS}")
        return v

    model_config = {"extra": "allow"}


def create_initial_state(subcommand: str, config_path: str, workers: Optional[int] = None,
                         check: bool = False, timestamp: bool = True,
                         output: Optional[str] = None) -> ExperimentState:
    options = RunOptions(workers=workers, check=check, timestamp=timestamp, output=output)
    return ExperimentState(
        subcommand=subcommand,
        config_path=str(config_path),
        options=options.model_dump(),
        config=None,
        output=None,
        failed_checks=[],
        csv_path=None,
        current_step="load_config",
        error=None,
        error_record=None,
        exit_code=0
    )


def validate_state(state: ExperimentState) -> tuple[bool, Optional[str]]:
    try:
        ExperimentStateValidator(**state)
        return True, None
    except Exception as e:
        return False, str(e)
