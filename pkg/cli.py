"""`mfsde <subcommand> <config.yaml>`: run one experiment and write its CSV table."""

import argparse
import logging
import sys
from functools import lru_cache
from typing import List, Optional

from config import get_settings
from graphs.experiment_graph import compile_experiment_graph
from graphs.state import create_initial_state
from models.experiment import SUBCOMMANDS

logger = logging.getLogger(__name__)


@lru_cache()
def get_compiled_graph():
    """Compile graph once and cache it."""
    return compile_experiment_graph()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfsde", description="Mean-field SDE simulation and delta estimation")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("config", help="experiment YAML file")
    parser.add_argument("--workers", type=int, default=None, help="worker threads (default from settings)")
    parser.add_argument("--check", action="store_true", help="fail with exit code 4 when a tolerance check fails")
    parser.add_argument("--no-timestamp", dest="timestamp", action="store_false",
                        help="omit the generated= line so outputs are byte-reproducible")
    parser.add_argument("--output", default=None, help="output directory (overrides MFSDE_OUTPUT_DIR and config)")
    return parser


def configure_logging() -> None:
    level = get_settings().runtime.log_level
    logging.basicConfig(level=getattr(logging, level), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is not None and args.workers < 1:
        parser.error("--workers must be at least 1")
    configure_logging()

    state = create_initial_state(args.subcommand, args.config, workers=args.workers, check=args.check,
                                 timestamp=args.timestamp, output=args.output)
    final = get_compiled_graph().invoke(state)

    if final.get("csv_path"):
        print(final["csv_path"])
    return int(final.get("exit_code", 0))


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
