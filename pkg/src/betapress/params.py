"""
Runtime parameter resolution.

This module handles:
1. Worker count, seed and log level resolution (explicit arg > env var > default)
2. Parsing of comma-separated term lists used by formulas and configs
"""

import logging
import os
from typing import Optional

from .errors import SpecValidationError

DEFAULT_SEED = 20140101
DEFAULT_WORKERS = 1


def resolve_workers(override: Optional[int] = None) -> int:
    """
    Resolve the number of worker processes.

    Priority (highest to lowest):
    1. Explicit argument (CLI flag or config key)
    2. Environment variable BETAPRESS_WORKERS
    3. Default (1, serial)

    Raises:
        SpecValidationError: If the resolved value is not a positive integer

    Examples:
        >>> resolve_workers(4)
        4

        >>> os.environ["BETAPRESS_WORKERS"] = "2"
        >>> resolve_workers()
        2
    """
    if override is not None:
        value = override
    else:
        raw = os.getenv("BETAPRESS_WORKERS", "").strip()
        if not raw:
            return DEFAULT_WORKERS
        try:
            value = int(raw)
        except ValueError:
            raise SpecValidationError(
                f"BETAPRESS_WORKERS must be an integer, got: {raw!r}",
                hints=["Unset BETAPRESS_WORKERS or set it to e.g. 4"],
            )

    if value < 1:
        raise SpecValidationError(f"workers must be >= 1, got: {value}")
    return value


def resolve_seed(override: Optional[int] = None) -> int:
    """Resolve the base seed: explicit argument, then BETAPRESS_SEED, then default."""
    if override is not None:
        return int(override)
    raw = os.getenv("BETAPRESS_SEED", "").strip()
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise SpecValidationError(f"BETAPRESS_SEED must be an integer, got: {raw!r}")
    return DEFAULT_SEED


def resolve_log_level(override: Optional[str] = None, default: str = "WARNING") -> int:
    """
    Resolve a logging level name to its numeric value.

    Examples:
        >>> resolve_log_level("debug")
        10
        >>> resolve_log_level(None, default="INFO")  # BETAPRESS_LOG_LEVEL unset
        20
    """
    name = (override or os.getenv("BETAPRESS_LOG_LEVEL", "") or default).strip().upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise SpecValidationError(
            f"Unknown log level: {name!r}",
            hints=["Use one of DEBUG, INFO, WARNING, ERROR"],
        )
    return level


def split_terms(raw: Optional[str]) -> list[str]:
    """
    Split a comma-separated term list, dropping blanks and the '1' intercept marker.

    Examples:
        >>> split_terms("logpower, x3")
        ['logpower', 'x3']
        >>> split_terms("1")
        []
        >>> split_terms(None)
        []
    """
    if not raw:
        return []
    terms = [t.strip() for t in raw.split(",")]
    return [t for t in terms if t and t != "1"]
