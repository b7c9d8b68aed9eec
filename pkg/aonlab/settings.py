from functools import lru_cache
import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .utils.error_handlers import ConfigurationError

load_dotenv()


class Settings(BaseModel):
    """Process-wide settings read from the environment (and a .env file)."""

    model_config = ConfigDict(frozen=True)

    log_level: str = Field(default="INFO")
    log_file: Optional[str] = None
    threads: Optional[int] = Field(default=None, ge=1)
    gram_cap: int = Field(default=4096, ge=1)
    ambient_cap: int = Field(default=4_000_000, ge=1)
    enumeration_cap: int = Field(default=5_000_000, ge=1)

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        v = v.strip().upper()
        if v not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {v}")
        return v


def _env_int(name: str) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got {raw!r}", key=name)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Reads AONLAB_* environment variables once per process."""
    values = {
        "log_level": os.getenv("AONLAB_LOG_LEVEL", "INFO"),
        "log_file": os.getenv("AONLAB_LOG_FILE") or None,
        "threads": _env_int("AONLAB_THREADS"),
    }
    for field, env in (
        ("gram_cap", "AONLAB_GRAM_CAP"),
        ("ambient_cap", "AONLAB_AMBIENT_CAP"),
        ("enumeration_cap", "AONLAB_ENUMERATION_CAP"),
    ):
        value = _env_int(env)
        if value is not None:
            values[field] = value
    return Settings(**values)
