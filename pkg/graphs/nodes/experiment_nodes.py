import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict
import yaml
from pydantic import ValidationError

from engine.workers import resolve_workers
from graphs.state import ExperimentState
from lamperti.transform import BUILTIN_DIFFUSIONS
from models.experiment import ExperimentConfig
from sensitivity.payoffs import make_payoff
from tools.executor import execute_pipeline
from utils.csv_storage import resolve_output_dir, save_results_csv
from utils.errors import ConfigError, MFSDEError, OracleMismatchError, PayoffError

logger = logging.getLogger(__name__)


def _failure(state: ExperimentState, error: Exception, step: str) -> ExperimentState:
    if isinstance(error, MFSDEError):
        record = error.to_record()
    else:
        record = {"error": type(error).__name__, "exit_code": 1, "message": str(error)}
    return {
        **state,
        "error": f"{step} failed: {record['message']}",
        "error_record": record,
        "exit_code": record["exit_code"],
        "current_step": step
    }


def load_config(config_path: str) -> ExperimentConfig:
    path = Path(config_path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding='utf-8') as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"config is not valid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a YAML mapping")
    try:
        config = ExperimentConfig(**raw)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e.errors(include_url=False)}") from e
    _check_components(config)
    return config


def _check_components(config: ExperimentConfig) -> None:
    """Resolve the payoff and diffusion ids so that a typo fails at load time."""
    try:
        make_payoff(config.payoff.id, config.payoff.params, config.payoff.epsilon)
    except PayoffError as e:
        raise ConfigError(f"invalid payoff: {e}") from e
    if config.lamperti.diffusion.id not in BUILTIN_DIFFUSIONS:
        raise ConfigError(f"unknown diffusion '{config.lamperti.diffusion.id}'; "
                          f"must be one of {sorted(BUILTIN_DIFFUSIONS)}")



def load_config_node(state: ExperimentState) -> ExperimentState:
    try:
        config = load_config(state["config_path"])
    except Exception as e:
        return _failure(state, e, "load_config")

    logger.info("loaded %s (digest %s)", state["config_path"], config.digest()[:12])
    return {
        **state,
        "config": config,
        "current_step": "run_pipeline",
        "error": None
    }


def run_pipeline_node(state: ExperimentState) -> ExperimentState:
    config = state.get("config")
    if config is None:
        return _failure(state, ConfigError("no configuration loaded"), "run_pipeline")

    workers = state.get("options", {}).get("workers") or None
    try:
        result = execute_pipeline(state["subcommand"], config, resolve_workers(workers))
    except Exception as e:
        return _failure(state, e, "run_pipeline")

    if not result.get("success"):
        return _failure(state, result["error"], "run_pipeline")

    return {
        **state,
        "output": result["result"],
        "current_step": "check_results",
        "error": None
    }


def check_results_node(state: ExperimentState) -> ExperimentState:
    output = state["output"]
    enforced = state.get("options", {}).get("check", False) or output.always_check
    failed = [c.model_dump() for c in output.checks if not c.passed]

    for check in output.checks:
        log = logger.info if check.passed else logger.warning
        log("check %s: %s (%s)", check.name, "ok" if check.passed else "FAILED", check.detail)

    return {
        **state,
        "failed_checks": failed if enforced else [],
        "current_step": "write_csv"
    }


def write_csv_node(state: ExperimentState) -> ExperimentState:
    config = state["config"]
    options = state.get("options", {})
    try:
        directory = resolve_output_dir(config.output, options.get("output"))
        csv_path = save_results_csv(state["output"].frame, directory, state["subcommand"],
                                    config.digest(), config.seed, timestamp=options.get("timestamp", True))
    except OSError as e:
        return _failure(state, ConfigError(f"cannot write results: {e}"), "write_csv")

    return {
        **state,
        "csv_path": str(csv_path),
        "current_step": "done"
    }


def check_failure_node(state: ExperimentState) -> ExperimentState:
    names = ", ".join(c["name"] for c in state.get("failed_checks", []))
    return _failure(state, OracleMismatchError(f"checks failed: {names}"), "check_results")


def error_handler_node(state: ExperimentState) -> ExperimentState:
    record: Dict[str, Any] = state.get("error_record") or {
        "error": "MFSDEError", "exit_code": 1, "message": state.get("error") or "unknown error"
    }
    record = {"subcommand": state.get("subcommand"), **record}
    if state.get("failed_checks"):
        record["failed_checks"] = state["failed_checks"]
    print(json.dumps(record, default=str), file=sys.stderr)

    return {
        **state,
        "error_record": record,
        "exit_code": record["exit_code"]
    }
