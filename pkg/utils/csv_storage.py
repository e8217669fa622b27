import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, Tuple
import numpy as np
import pandas as pd

from config.settings import get_settings

logger = logging.getLogger(__name__)


def _format_value(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def resolve_output_dir(config_output: str, cli_output: Optional[str] = None) -> Path:
    """--output wins, then the output_dir setting (MFSDE_OUTPUT_DIR), then the config's output entry."""
    if cli_output:
        return Path(cli_output)
    return get_settings().output_dir or Path(config_output)


def save_results_csv(frame: pd.DataFrame, directory: Path, subcommand: str, digest: str, seed: int,
                     timestamp: bool = True) -> Path:
    """Write one result table with its metadata comment lines; floats use shortest round-trip repr."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    file_path = directory / f"{subcommand}.csv"

    formatted = frame.copy()
    for column in formatted.columns:
        formatted[column] = formatted[column].map(_format_value).astype(object)

    lines = [f"# config_digest={digest} seed={seed} subcommand={subcommand}\n"]
    if timestamp:
        lines.append(f"# generated={datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')}\n")
    body = formatted.to_csv(index=False, lineterminator="\n")

    with open(file_path, 'w', encoding='utf-8', newline='') as f:
        f.writelines(lines)
        f.write(body)
    logger.info("wrote %d rows to %s", len(frame), file_path)
    return file_path


def load_results_csv(file_path: Path) -> Tuple[Dict[str, str], pd.DataFrame]:
    """Read a result table back as (metadata, frame)."""
    metadata: Dict[str, str] = {}
    with open(file_path, 'r', encoding='utf-8') as f:
        for line in f:
            if not line.startswith("#"):
                break
            for token in line[1:].split():
                key, _, value = token.partition("=")
                metadata[key] = value
    frame = pd.read_csv(file_path, comment="#")
    return metadata, frame
