import argparse
import sys
from typing import List, Optional

from . import __version__
from .commands import COMMANDS
from .commands.options import resolve_config
from .settings import get_settings
from .utils.error_handlers import EXIT_CONFIGURATION, handle_command_errors
from .utils.logging_config import get_logger, setup_logging

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aonlab",
        description="Numerical laboratory for the all-or-nothing transition in the Gaussian additive model",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


@handle_command_errors
def dispatch(args: argparse.Namespace) -> int:
    config = resolve_config(args, get_settings())
    logger.info(f"Running {args.command} with seed {config.seed} on {config.threads} thread(s)")
    return args.handler(config)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        settings = get_settings()
    except Exception as e:
        # logging is not configured yet
        print(f"aonlab: invalid environment configuration: {e}", file=sys.stderr)
        return EXIT_CONFIGURATION

    setup_logging(settings.log_level, enable_file_logging=bool(settings.log_file), log_file=settings.log_file)

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help / --version
        return int(e.code or 0)

    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
