"""
`aonlab verify`: runs the invariant suite and exits non-zero on any failure.
"""

import argparse

from ..models.config import SweepConfig
from ..services.experiment_service import trial_executor
from ..services.verification_service import run_verify
from .options import add_common_arguments


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "verify",
        help="invariant suite with a pass/fail table",
        description="Runs every module's invariant checks at fixed seeds. "
                    "--inject-fault gram-diagonal must make the suite fail.",
    )
    add_common_arguments(parser)
    parser.set_defaults(handler=run)


def run(config: SweepConfig) -> int:
    with trial_executor(config.threads) as executor:
        return run_verify(config, executor)
