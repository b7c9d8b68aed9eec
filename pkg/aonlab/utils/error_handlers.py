"""
Exception hierarchy and CLI exception handlers for aonlab.

Handlers map exceptions to process exit codes the same way an API maps them to
status codes: configuration problems are the caller's fault (2), everything else
is a failed run (1).
"""

import functools
import logging
import traceback
from typing import Callable, Optional

from pydantic import ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIGURATION = 2


class AonLabError(Exception):
    """Base class for every domain error raised by aonlab."""


class CardinalityExceeded(AonLabError):
    """Raised when a support, Gram matrix or dense tensor would exceed its cap."""

    def __init__(self, what: str, size: int, cap: int):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(f"{what} has size {size}, which exceeds the cap {cap}")


class DimensionMismatch(AonLabError):
    """Raised when two objects that must share a dimension do not."""

    def __init__(self, expected: int, actual: int, context: str = ""):
        self.expected = expected
        self.actual = actual
        self.context = context
        suffix = f" ({context})" if context else ""
        super().__init__(f"Dimension mismatch: expected {expected}, got {actual}{suffix}")


class FactorizationFailure(AonLabError):
    """Raised when the Gram matrix cannot be factorized within the jitter ladder."""

    def __init__(self, size: int, max_jitter: float):
        self.size = size
        self.max_jitter = max_jitter
        super().__init__(
            f"Cholesky factorization of a {size}x{size} Gram matrix failed "
            f"with diagonal jitter up to {max_jitter:g}"
        )


class NumericalFailure(AonLabError):
    """Raised when adaptive quadrature or another numerical routine does not converge."""

    def __init__(self, routine: str, detail: str):
        self.routine = routine
        self.detail = detail
        super().__init__(f"{routine} failed: {detail}")


class DomainError(AonLabError, ValueError):
    """Raised for arguments outside the mathematical domain of an operation."""


class ConfigurationError(AonLabError):
    """Raised for malformed config files, unknown keys and invalid flag values."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(message)


def exit_code_for(exc: BaseException) -> int:
    """
    Maps an exception raised by a command to the process exit code.

    Args:
        exc: Exception that escaped the command handler

    Returns:
        int: 2 for configuration errors, 1 for everything else
    """
    if isinstance(exc, (ConfigurationError, ValidationError)):
        logger.warning(f"Configuration error: {exc}")
        return EXIT_CONFIGURATION

    if isinstance(exc, CardinalityExceeded):
        logger.error(f"Cardinality cap exceeded: {exc.what} size={exc.size} cap={exc.cap}")
        return EXIT_FAILURE

    if isinstance(exc, NumericalFailure):
        logger.error(f"Numerical failure in {exc.routine}: {exc.detail}")
        return EXIT_FAILURE

    if isinstance(exc, AonLabError):
        logger.error(f"Run failed: {exc}")
        return EXIT_FAILURE

    if isinstance(exc, OSError):
        logger.error(f"I/O error: {exc}")
        return EXIT_FAILURE

    logger.error(f"Unhandled exception: {exc}")
    logger.error(f"Full traceback: {traceback.format_exc()}")
    return EXIT_FAILURE


def handle_command_errors(command: Callable[..., int]) -> Callable[..., int]:
    """
    Wraps a CLI command so that every exception becomes a logged exit code.

    Args:
        command: Callable returning an exit code

    Returns:
        Callable: Wrapped command that never raises
    """

    @functools.wraps(command)
    def wrapper(*args, **kwargs) -> int:
        try:
            return command(*args, **kwargs)
        except Exception as exc:  # noqa: BLE001 - translated to an exit code
            return exit_code_for(exc)

    return wrapper
