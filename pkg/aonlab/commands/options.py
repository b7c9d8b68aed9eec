"""
Shared flags and configuration resolution for every subcommand.

Precedence: command-line flag > config-file key > environment (threads and caps)
> SweepConfig default.
"""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from ..models.config import FAULTS, SweepConfig
from ..models.prior import PriorKind
from ..settings import Settings
from ..utils.error_handlers import ConfigurationError

logger = logging.getLogger(__name__)

# long flag name -> SweepConfig field
CONFIG_KEYS = {
    "prior": "prior",
    "p": "p",
    "k": "k",
    "m": "m",
    "d": "d",
    "beta-grid": "beta_grid",
    "trials": "trials",
    "seed": "seed",
    "threads": "threads",
    "out": "out",
    "t-grid": "t_grid",
    "lambda-grid": "lambda_grid",
    "rho-grid": "rho_grid",
    "inject-fault": "inject_fault",
}


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """Adds the flags shared by all subcommands; every default is None so unset flags are detectable."""
    group = parser.add_argument_group("prior")
    group.add_argument("--prior", choices=[kind.value for kind in PriorKind], default=None)
    group.add_argument("--p", type=int, default=None, help="base dimension (sparse priors)")
    group.add_argument("--k", type=int, default=None, help="sparsity (sparse priors)")
    group.add_argument("--m", type=int, default=None, help="number of signals (orthogonal prior)")
    group.add_argument("--d", type=int, default=None, help="tensor order")

    group = parser.add_argument_group("run")
    group.add_argument("--beta-grid", default=None, metavar="A:B:STEP")
    group.add_argument("--trials", type=int, default=None)
    group.add_argument("--seed", type=int, default=None)
    group.add_argument("--threads", type=int, default=None)
    group.add_argument("--out", default=None, metavar="FILE", help="CSV output (stdout when omitted)")
    group.add_argument("--config", default=None, metavar="FILE", help="flat key=value file of long flag names")

    group = parser.add_argument_group("reports")
    group.add_argument("--t-grid", default=None, metavar="A:B:STEP")
    group.add_argument("--lambda-grid", default=None, metavar="LIST")
    group.add_argument("--rho-grid", default=None, metavar="LIST")
    group.add_argument("--inject-fault", choices=FAULTS, default=None)


def read_config_file(path: str) -> Dict[str, str]:
    """
    Parses a flat key=value config file into SweepConfig field values.

    Raises:
        ConfigurationError: unreadable file, unknown key or key without a value
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigurationError(f"Config file not found: {path}", key="config")
    try:
        raw = dotenv_values(config_path)
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigurationError(f"Cannot read config file {path}: {e}", key="config") from e

    values = {}
    for key, value in raw.items():
        name = key.strip().lower()
        if name not in CONFIG_KEYS:
            raise ConfigurationError(f"Unknown config key {key!r} in {path}", key=key)
        if value is None or value.strip() == "":
            raise ConfigurationError(f"Config key {key!r} in {path} has no value", key=key)
        values[CONFIG_KEYS[name]] = value.strip()
    logger.debug(f"Read {len(values)} keys from {path}")
    return values


def resolve_config(args: argparse.Namespace, settings: Settings) -> SweepConfig:
    """
    Builds the effective SweepConfig of a run.

    Raises:
        ConfigurationError: for config-file problems and values failing validation
    """
    values: Dict[str, Any] = {
        "gram_cap": settings.gram_cap,
        "ambient_cap": settings.ambient_cap,
        "enumeration_cap": settings.enumeration_cap,
    }
    if settings.threads is not None:
        values["threads"] = settings.threads

    config_file: Optional[str] = getattr(args, "config", None)
    if config_file:
        values.update(read_config_file(config_file))

    for field in CONFIG_KEYS.values():
        flag = getattr(args, field, None)
        if flag is not None:
            values[field] = flag

    try:
        return SweepConfig(**values)
    except ValidationError as e:
        error = e.errors()[0]
        location = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigurationError(f"Invalid value for {location}: {error['msg']}", key=location) from e
