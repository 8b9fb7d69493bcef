"""Process-wide settings read from the environment.

Modules access these through ``from riesz_tomo import config`` and call
``config.get_threads()``; tests patch ``riesz_tomo.config.RIESZ_TOMO_THREADS`` once
and the patch reaches every caller.
"""

from __future__ import annotations

import logging
import os

from .exceptions import ParameterError

# Get riesz-tomo configuration from environment variables
RIESZ_TOMO_THREADS = os.getenv("RIESZ_TOMO_THREADS")
RIESZ_TOMO_LOG_LEVEL = os.getenv("RIESZ_TOMO_LOG_LEVEL", "INFO")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def get_threads(requested: int | None = None) -> int:
    """Resolve the worker count: explicit value, then env var, then core count."""
    value = requested
    if value is None and RIESZ_TOMO_THREADS:
        try:
            value = int(RIESZ_TOMO_THREADS)
        except ValueError as e:
            raise ParameterError(
                f"RIESZ_TOMO_THREADS must be an integer, got {RIESZ_TOMO_THREADS!r}"
            ) from e
    if value is None:
        value = os.cpu_count() or 1
    if value < 1:
        raise ParameterError(f"thread count must be >= 1, got {value}")
    return value


def get_log_level() -> int:
    """Logging level named by ``RIESZ_TOMO_LOG_LEVEL`` (unknown names fall back to INFO)."""
    level = logging.getLevelName(RIESZ_TOMO_LOG_LEVEL.upper())
    return level if isinstance(level, int) else logging.INFO
