"""
Shared helpers for the BetaPress tool and command surfaces.

Error handling for MCP tools, logging setup for entry points and number
formatting for terminal reports.
"""

import functools
import inspect
import logging
import sys
from typing import Optional

from mcp.types import ToolAnnotations

from .errors import BetaPressError, ErrorCode, create_error_response, error_response_from

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# All BetaPress tools read local files and compute; nothing is written
TOOL_ANNOTATIONS = ToolAnnotations(
    readOnlyHint=True,
    destructiveHint=False,
    idempotentHint=True,
)


def configure_logging(level: int) -> None:
    """Send log records to stderr with the shared format; stdout stays for reports."""
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _error_payload(func_name: str, e: Exception) -> dict:
    if isinstance(e, BetaPressError):
        logger.warning(f"{e.error_code} in {func_name}: {e}")
        return error_response_from(e)
    if isinstance(e, (ValueError, OSError, KeyError)):
        logger.warning(f"Validation error in {func_name}: {e}")
        return create_error_response(error_code=ErrorCode.VALIDATION_ERROR, message=str(e))
    logger.exception(f"Unexpected error in {func_name}: {e}")
    return create_error_response(
        error_code=ErrorCode.INTERNAL_ERROR,
        message=f"Unexpected error: {str(e)}",
    )


def handle_tool_error(func):
    """Decorator wrapping tool functions with standardized error handling.
    BetaPressError keeps its code, hints and context; other ValueError/OSError
    become VALIDATION_ERROR; anything else is INTERNAL_ERROR. Works with both
    sync and async functions.
    """
    if inspect.iscoroutinefunction(func):
        @functools.wraps(func)
        async def async_wrapper(*args, **kwargs):
            try:
                return await func(*args, **kwargs)
            except Exception as e:
                return _error_payload(func.__name__, e)
        return async_wrapper

    @functools.wraps(func)
    def sync_wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except Exception as e:
            return _error_payload(func.__name__, e)
    return sync_wrapper


def format_number(value: Optional[float], digits: int = 4) -> str:
    """
    Four significant digits for terminal tables.

    Examples:
        >>> format_number(0.693812)
        '0.6938'
        >>> format_number(None)
        'NA'
    """
    if value is None or value != value:
        return "NA"
    return f"{value:.{digits}g}"
