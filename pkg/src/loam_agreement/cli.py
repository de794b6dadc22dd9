import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .compare_cli import add_compare_commands, handle_compare_command
from .config import load_config
from .core.error_handler import ErrorHandler, configure_logging
from .estimate_cli import add_estimate_commands, handle_estimate_command
from .planning_cli import add_planning_commands, handle_planning_command
from .simulate_cli import add_simulate_commands, handle_simulate_command

HANDLERS = {
    "estimate": handle_estimate_command,
    "samplesize": handle_planning_command,
    "compare": handle_compare_command,
    "simulate": handle_simulate_command,
    "coverage": handle_simulate_command,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loam", description="Limits of agreement with the mean for multi-observer studies")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", required=False, default="config.yaml")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="count", default=0)
    sub = parser.add_subparsers(dest="cmd", required=True)

    add_estimate_commands(sub)
    add_planning_commands(sub)
    add_compare_commands(sub)
    add_simulate_commands(sub)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = ErrorHandler(logging.getLogger("loam_agreement.cli"), sys.stderr)

    @handler.guard
    def run() -> int:
        configure_logging(args.verbose - args.quiet, sys.stderr)
        cfg = load_config(Path(args.config))
        return HANDLERS[args.cmd](args, cfg)

    return run()


if __name__ == "__main__":
    raise SystemExit(main())
