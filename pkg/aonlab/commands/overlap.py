"""
`aonlab overlap`: exact overlap tails and rate function of the lifted prior.
"""

import argparse

from ..models.config import SweepConfig
from ..services.experiment_service import run_overlap_report
from ..utils.error_handlers import EXIT_OK
from .options import add_common_arguments


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "overlap",
        help="overlap tails, rate function and margin over 2t/(1+t)",
    )
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: SweepConfig) -> int:
    run_overlap_report(config)
    return EXIT_OK
