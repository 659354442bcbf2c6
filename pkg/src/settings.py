# ============================================================================
# FILE: settings.py
# ============================================================================

import os
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, Field

from src.errors import ConfigError

load_dotenv()

_DEFAULT_DESIGN_BYTES = 256 * 1024 * 1024


class Settings(BaseModel):
    """Process-level knobs read from the environment"""

    threads: int = Field(0, ge=0, description="Parallelism cap, 0 = auto")
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        "WARNING", description="Root logger level"
    )
    max_design_bytes: int = Field(
        _DEFAULT_DESIGN_BYTES,
        gt=0,
        description="Memory cap for the explicit design matrix",
    )

    @property
    def workers(self) -> int:
        return self.threads or (os.cpu_count() or 1)


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None


def load_settings() -> Settings:
    """Read MOD_* variables; called per use so tests can monkeypatch the env"""
    return Settings(
        threads=_int_env("MOD_THREADS", 0),
        log_level=os.getenv("MOD_LOG_LEVEL", "WARNING").upper(),
        max_design_bytes=_int_env("MOD_MAX_DESIGN_BYTES", _DEFAULT_DESIGN_BYTES),
    )
