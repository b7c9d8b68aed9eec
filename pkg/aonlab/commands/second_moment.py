"""
`aonlab second-moment`: truncated second-moment margins and conditional chi-square bounds.
"""

import argparse

from ..models.config import SweepConfig
from ..services.experiment_service import run_second_moment_report
from ..utils.error_handlers import EXIT_OK
from .options import add_common_arguments


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "second-moment",
        help="truncated moment m(rho, lambda) and the conditional chi-square bound",
        description="Long-format table: prop5 rows per (lambda, rho), rate rows per t and "
                    "bound rows per lambda (the lambda grid plus 2 log M).",
    )
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: SweepConfig) -> int:
    run_second_moment_report(config)
    return EXIT_OK
