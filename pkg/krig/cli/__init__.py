"""
Command-line front end.

Usage:
    krig compromise example_3_2_1.json --weak
    krig fit design.csv y.csv --nu 2.5 --samples 1000
    krig predict results/fit/fit.json points.csv --level 0.95
    krig experiment coverage --m 50 --workers 4

Exit codes: 0 success, 1 unexpected error, 2 usage or input error, 3 non-unique
Gibbs compromise, 4 numerical failure, 5 too many failed replications.
"""

import argparse
import logging as std_logging
from typing import List, Optional

from krig import __version__
from krig.cli import compromise, experiment, fit, predict
from krig.cli.error_handling import handle_errors
from krig.config import settings

logger = std_logging.getLogger(__name__)

COMMANDS = (compromise, fit, predict, experiment)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="krig",
        description="Gibbs compromises and objective Bayesian Simple Kriging",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "--log-level",
        default=None,
        help=f"Logging level (default: {settings.LOG_LEVEL})",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    std_logging.basicConfig(
        level=(args.log_level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return handle_errors(args.command, lambda: args.handler(args))
