"""
`aonlab sweep`: MMSE and KL of the posterior mean along a beta grid.
"""

import argparse

from ..models.config import SweepConfig
from ..services.experiment_service import run_sweep
from ..utils.error_handlers import EXIT_OK
from .options import add_common_arguments


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "sweep",
        help="MMSE and KL sweep over beta = lambda / (2 log M)",
        description="Monte-Carlo MMSE and KL with standard errors at every beta of the grid, "
                    "all betas sharing the same trials.",
    )
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: SweepConfig) -> int:
    run_sweep(config)
    return EXIT_OK
