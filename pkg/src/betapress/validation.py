"""
Validation of beta-regression specifications.

validate_spec reports every violated invariant of a ModelSpec instead of
stopping at the first one, so a user sees all problems with a dataset in
one pass.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import SpecValidationError
from .model import ModelSpec

RESPONSE_ON_BOUNDARY = "response on boundary"
RANK_DEFICIENCY = "rank deficiency"
TOO_MANY_PARAMETERS = "too many parameters"
NON_FINITE = "non-finite entries"
MISSING_INTERCEPT = "missing intercept"


@dataclass
class ValidationReport:
    """Outcome of validate_spec: one message per violated invariant."""

    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def raise_if_failed(self) -> None:
        if self.violations:
            raise SpecValidationError(
                "Invalid model specification: " + "; ".join(self.violations),
                hints=_hints_for(self.violations),
            )


def _hints_for(violations: list[str]) -> list[str]:
    hints = []
    if any(v.startswith(RESPONSE_ON_BOUNDARY) for v in violations):
        hints.append("Apply the shrink-boundary transform (y*(n-1)+0.5)/n")
    if any(v.startswith(RANK_DEFICIENCY) for v in violations):
        hints.append("Drop duplicated or linearly dependent covariate columns")
    if any(v.startswith(TOO_MANY_PARAMETERS) for v in violations):
        hints.append("Use fewer covariates or more observations (k + q < n)")
    return hints


def _full_rank(M: np.ndarray) -> bool:
    return np.linalg.matrix_rank(M) == M.shape[1]


def validate_spec(spec: ModelSpec) -> ValidationReport:
    """
    Check every ModelSpec invariant and report each violation.

    Checks, in order: finite entries, response strictly inside (0, 1),
    k + q < n, intercept first columns, full column rank of X and Z.

    Examples:
        >>> spec = ModelSpec(y=[0.2, 1.0, 0.4, 0.5], X=np.ones((4, 1)), Z=np.ones((4, 1)))
        >>> validate_spec(spec).violations
        ['response on boundary: row 2 (y = 1.0)']
    """
    report = ValidationReport()
    y, X, Z = spec.y, spec.X, spec.Z

    finite = True
    for name, arr in (("y", y), ("X", X), ("Z", Z)):
        if not np.all(np.isfinite(arr)):
            report.violations.append(f"{NON_FINITE} in {name}")
            finite = False

    outside = np.flatnonzero(~((y > 0.0) & (y < 1.0)) & np.isfinite(y))
    for idx in outside:
        report.violations.append(f"{RESPONSE_ON_BOUNDARY}: row {idx + 1} (y = {y[idx]!r})")

    if spec.k + spec.q >= spec.n:
        report.violations.append(
            f"{TOO_MANY_PARAMETERS}: k + q = {spec.k + spec.q} must be < n = {spec.n}"
        )

    for name, M in (("X", X), ("Z", Z)):
        if M.shape[1] == 0 or not np.allclose(M[:, 0], 1.0):
            report.violations.append(f"{MISSING_INTERCEPT}: first column of {name} must be all ones")

    if finite:
        for name, M in (("X", X), ("Z", Z)):
            if M.shape[1] > 0 and not _full_rank(M):
                report.violations.append(f"{RANK_DEFICIENCY} in {name}")

    return report
