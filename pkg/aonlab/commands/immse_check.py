"""
`aonlab immse-check`: derivative of the normalized KL against (1 - MMSE) / 2.
"""

import argparse

from ..models.config import SweepConfig
from ..services.experiment_service import run_immse_report
from ..utils.error_handlers import EXIT_OK
from .options import add_common_arguments


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "immse-check",
        help="I-MMSE consistency table on a uniform beta grid",
    )
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: SweepConfig) -> int:
    run_immse_report(config)
    return EXIT_OK
