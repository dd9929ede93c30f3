"""
Error codes, exception types and standardized error payloads.

This module provides consistent error handling across BetaPress, ensuring
users receive actionable messages with resolution hints and that the CLI
exits with a stable code.
"""

from typing import Optional


class ErrorCode:
    """Standardized error codes for BetaPress."""

    VALIDATION_ERROR = "VALIDATION_ERROR"
    """Dataset, formula, option or config validation failed."""

    DOMAIN_ERROR = "DOMAIN_ERROR"
    """Argument outside the domain of a function (e.g. y on the boundary)."""

    ESTIMATION_ERROR = "ESTIMATION_ERROR"
    """Singular information block, rank-deficient design or failed fit."""

    NUMERICAL_ERROR = "NUMERICAL_ERROR"
    """Degenerate numerical quantity (h*_tt = 1, zeta_t <= 0, SST = 0)."""

    INTERNAL_ERROR = "INTERNAL_ERROR"
    """Unexpected error (should not occur in normal operation)."""


class ExitCode:
    """Process exit codes of the command-line surface."""

    OK = 0
    USER_ERROR = 1
    NUMERICAL_FAILURE = 2


class BetaPressError(Exception):
    """Base class for BetaPress errors. Carries optional resolution hints."""

    error_code = ErrorCode.INTERNAL_ERROR

    def __init__(self, message: str, hints: Optional[list[str]] = None, **context):
        super().__init__(message)
        self.hints = hints
        self.context = context


class SpecValidationError(BetaPressError, ValueError):
    """Invalid dataset, formula, option or model specification."""

    error_code = ErrorCode.VALIDATION_ERROR


class ConfigurationError(SpecValidationError):
    """Invalid scenario configuration (names the offending key)."""

    def __init__(self, message: str, key: Optional[str] = None, hints: Optional[list[str]] = None):
        super().__init__(message, hints=hints, key=key)
        self.key = key


class DomainError(BetaPressError, ValueError):
    """Argument outside the domain of a function."""

    error_code = ErrorCode.DOMAIN_ERROR


class EstimationError(BetaPressError, ArithmeticError):
    """Estimation failed: singular information, rank deficiency, bad start."""

    error_code = ErrorCode.ESTIMATION_ERROR


class NumericalDegeneracyError(EstimationError):
    """A derived quantity is degenerate at some observation."""

    error_code = ErrorCode.NUMERICAL_ERROR

    def __init__(self, message: str, index: Optional[int] = None, hints: Optional[list[str]] = None):
        super().__init__(message, hints=hints, index=index)
        self.index = index


class DegenerateLeverageError(NumericalDegeneracyError):
    """Some h*_tt equals one, so the deleted residual is undefined."""


class UndefinedCoefficientError(NumericalDegeneracyError):
    """SST_(t) is zero, so P^2 is undefined."""


class InconsistencyError(NumericalDegeneracyError):
    """The null model fits better than the model under investigation."""


def exit_code_for(exc: BaseException) -> int:
    """
    Map an exception to the CLI exit-code contract.

    Returns:
        1 for user errors (validation, configuration, I/O, domain),
        2 for numerical failures (estimation, degeneracy)

    Example:
        >>> exit_code_for(ConfigurationError("unknown key 'nn'", key="nn"))
        1
        >>> exit_code_for(DegenerateLeverageError("h*_tt = 1 at observation 4", index=4))
        2
    """
    if isinstance(exc, EstimationError):
        return ExitCode.NUMERICAL_FAILURE
    if isinstance(exc, (ValueError, OSError, KeyError)):
        return ExitCode.USER_ERROR
    return ExitCode.NUMERICAL_FAILURE


def create_error_response(
    error_code: str,
    message: str,
    hints: Optional[list[str]] = None,
    **extra
) -> dict:
    """
    Create standardized error response.

    Args:
        error_code: Error code from ErrorCode class
        message: Human-readable error message
        hints: Optional list of resolution suggestions
        **extra: Additional context fields (e.g. observation index, config key)

    Returns:
        Error response dict with status="error"

    Example:
        >>> create_error_response(
        ...     ErrorCode.DOMAIN_ERROR,
        ...     "response on boundary at row 7",
        ...     hints=["Pass --shrink-boundary to apply (y*(n-1)+0.5)/n"],
        ... )
        {
            "status": "error",
            "error_code": "DOMAIN_ERROR",
            "message": "response on boundary at row 7",
            "hints": ["Pass --shrink-boundary to apply (y*(n-1)+0.5)/n"]
        }
    """
    response = {
        "status": "error",
        "error_code": error_code,
        "message": message,
    }

    if hints:
        response["hints"] = hints

    # Drop empty context fields
    response.update({k: v for k, v in extra.items() if v is not None})

    return response


def error_response_from(exc: BaseException) -> dict:
    """Build an error payload from any exception, keeping hints and context."""
    if isinstance(exc, BetaPressError):
        return create_error_response(
            exc.error_code, str(exc), hints=exc.hints, **exc.context
        )
    if isinstance(exc, (ValueError, OSError, KeyError)):
        return create_error_response(ErrorCode.VALIDATION_ERROR, str(exc))
    return create_error_response(ErrorCode.INTERNAL_ERROR, f"Unexpected error: {exc}")
