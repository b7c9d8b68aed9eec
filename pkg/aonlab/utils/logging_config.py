import logging
import logging.config
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

# record attributes rendered after the message when a caller passes them via `extra`
CONTEXT_FIELDS = ("experiment", "prior", "beta", "lam", "check", "trials")

DEFAULT_LOG_FILE = "logs/aonlab.log"


class StructuredFormatter(logging.Formatter):
    """
    One line per record: timestamp, level, logger, message, then the experiment
    context as key=value pairs. Errors also carry their source location.
    """

    def format(self, record: logging.LogRecord) -> str:
        timestamp = datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")
        parts = [f"[{timestamp}]", f"[{record.levelname}]", f"[{record.name}]", record.getMessage()]

        context = [f"{field}={getattr(record, field)}" for field in CONTEXT_FIELDS if hasattr(record, field)]
        if context:
            parts.append("(" + " ".join(context) + ")")

        if record.levelno >= logging.ERROR:
            parts.append(f"({record.filename}:{record.lineno} in {record.funcName})")

        line = " ".join(parts)
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


def setup_logging(
    log_level: str = "INFO",
    enable_file_logging: bool = False,
    log_file: Optional[str] = None,
) -> None:
    """
    Configures the `aonlab` logger tree.

    Console output goes to stderr so that CSV written to stdout stays clean.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        enable_file_logging: Whether to add a rotating file handler
        log_file: Path of the log file (defaults to logs/aonlab.log)
    """
    handlers = {
        "console": {
            "class": "logging.StreamHandler",
            "level": log_level,
            "formatter": "structured",
            "stream": sys.stderr,
        }
    }
    if enable_file_logging:
        path = Path(log_file or DEFAULT_LOG_FILE)
        path.parent.mkdir(parents=True, exist_ok=True)
        handlers["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": log_level,
            "formatter": "structured",
            "filename": str(path),
            "maxBytes": 10485760,  # 10MB
            "backupCount": 5,
            "encoding": "utf8",
        }

    logging.config.dictConfig({
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {"structured": {"()": StructuredFormatter}},
        "handlers": handlers,
        "loggers": {
            "aonlab": {"level": log_level, "handlers": list(handlers), "propagate": False},
        },
        "root": {"level": "WARNING", "handlers": list(handlers)},
    })


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


class LogContext:
    """Binds experiment context (experiment, prior, beta, ...) to every log call."""

    def __init__(self, logger: logging.Logger, **context):
        self.logger = logger
        self.context = context

    def info(self, message: str, **extra):
        self.logger.info(message, extra={**self.context, **extra})

    def warning(self, message: str, **extra):
        self.logger.warning(message, extra={**self.context, **extra})
