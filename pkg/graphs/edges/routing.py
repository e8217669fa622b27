from typing import Literal
from graphs.state import ExperimentState


def route_after_load(state: ExperimentState) -> Literal["run_pipeline", "error"]:
    if state.get("error"):
        return "error"
    if state.get("config") is None:
        return "error"
    return "run_pipeline"


def route_after_pipeline(state: ExperimentState) -> Literal["check_results", "error"]:
    if state.get("error"):
        return "error"
    if state.get("output") is None:
        return "error"
    return "check_results"


def route_after_write(state: ExperimentState) -> Literal["check_failure", "end", "error"]:
    if state.get("error"):
        return "error"
    if state.get("failed_checks"):
        return "check_failure"
    return "end"
