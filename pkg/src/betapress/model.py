"""
Data model for beta-regression problems.

ModelSpec holds the response, the mean design X, the precision design Z and
the two links. FittedModel holds converged estimates and everything derived
from them at the estimate. Both are immutable once built.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .errors import DomainError, SpecValidationError
from .links import LinkFunction, MEAN_LINKS, PRECISION_LINKS


def shrink_boundary(y: np.ndarray) -> np.ndarray:
    """
    Pull responses off the boundary with (y*(n - 1) + 0.5) / n.

    Example:
        >>> shrink_boundary(np.array([0.0, 0.5, 1.0]))
        array([0.16666667, 0.5       , 0.83333333])
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    return (y * (n - 1) + 0.5) / n


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelSpec:
    """Response, designs and links of a beta regression with varying dispersion."""

    y: np.ndarray
    X: np.ndarray
    Z: np.ndarray
    mean_link: LinkFunction = LinkFunction.LOGIT
    precision_link: LinkFunction = LinkFunction.LOG
    mean_names: tuple[str, ...] = ()
    precision_names: tuple[str, ...] = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        Z = np.asarray(self.Z, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if Z.ndim == 1:
            Z = Z.reshape(-1, 1)
        if X.shape[0] != y.shape[0] or Z.shape[0] != y.shape[0]:
            raise SpecValidationError(
                f"Design rows must match the response length {y.shape[0]}, "
                f"got X with {X.shape[0]} and Z with {Z.shape[0]} rows"
            )

        mean_link = LinkFunction(self.mean_link)
        precision_link = LinkFunction(self.precision_link)
        if mean_link not in MEAN_LINKS:
            raise SpecValidationError(
                f"{mean_link.value} is not a mean link",
                hints=[f"Use one of: {', '.join(l.value for l in MEAN_LINKS)}"],
            )
        if precision_link not in PRECISION_LINKS:
            raise SpecValidationError(
                f"{precision_link.value} is not a precision link",
                hints=["The precision submodel uses the log link"],
            )

        mean_names = tuple(self.mean_names) or _default_names("x", X.shape[1])
        precision_names = tuple(self.precision_names) or _default_names("z", Z.shape[1])

        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "Z", _frozen(Z))
        object.__setattr__(self, "mean_link", mean_link)
        object.__setattr__(self, "precision_link", precision_link)
        object.__setattr__(self, "mean_names", mean_names)
        object.__setattr__(self, "precision_names", precision_names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Z.shape[1]

    @property
    def p(self) -> int:
        """Number of model parameters, k + q."""
        return self.k + self.q

    @property
    def fixed_dispersion(self) -> bool:
        return self.q == 1

    @classmethod
    def from_arrays(
        cls,
        y: Sequence[float],
        X: Optional[np.ndarray] = None,
        Z: Optional[np.ndarray] = None,
        mean_link: LinkFunction = LinkFunction.LOGIT,
        precision_link: LinkFunction = LinkFunction.LOG,
        add_intercept: bool = True,
        shrink: bool = False,
        mean_names: Sequence[str] = (),
        precision_names: Sequence[str] = (),
    ) -> "ModelSpec":
        """
        Build a spec from covariate arrays, prepending intercept columns.

        X=None or Z=None means intercept only. With shrink=True the response
        is passed through shrink_boundary first; otherwise boundary values
        raise DomainError.
        """
        y = np.asarray(y, dtype=float).reshape(-1)
        if shrink:
            y = shrink_boundary(y)
        elif np.any((y <= 0.0) | (y >= 1.0)):
            row = int(np.flatnonzero((y <= 0.0) | (y >= 1.0))[0]) + 1
            raise DomainError(
                f"response on boundary at row {row} (y = {y[row - 1]!r})",
                hints=["Enable the shrink-boundary transform (y*(n-1)+0.5)/n"],
                row=row,
            )

        n = y.shape[0]
        X_mat = _with_intercept(X, n, add_intercept)
        Z_mat = _with_intercept(Z, n, add_intercept)
        if add_intercept:
            mean_names = ("(Intercept)",) + tuple(mean_names) if mean_names else ()
            precision_names = ("(Intercept)",) + tuple(precision_names) if precision_names else ()
        return cls(
            y=y, X=X_mat, Z=Z_mat,
            mean_link=mean_link, precision_link=precision_link,
            mean_names=tuple(mean_names), precision_names=tuple(precision_names),
        )

    def with_fixed_dispersion(self) -> "ModelSpec":
        """The q = 1 variant: Z is a column of ones, log link."""
        return replace(
            self,
            Z=np.ones((self.n, 1)),
            precision_link=LinkFunction.LOG,
            precision_names=("(Intercept)",),
        )

    def null_model(self) -> "ModelSpec":
        """Intercept-only mean and precision submodels on the same response."""
        return ModelSpec(
            y=self.y,
            X=np.ones((self.n, 1)),
            Z=np.ones((self.n, 1)),
            mean_link=LinkFunction.LOGIT,
            precision_link=LinkFunction.LOG,
            mean_names=("(Intercept)",),
            precision_names=("(Intercept)",),
        )

    def subset(self, rows: np.ndarray) -> "ModelSpec":
        """Spec restricted to the given row indices (0-based)."""
        rows = np.asarray(rows)
        return replace(self, y=self.y[rows], X=self.X[rows], Z=self.Z[rows])


def _default_names(prefix: str, width: int) -> tuple[str, ...]:
    return ("(Intercept)",) + tuple(f"{prefix}{j}" for j in range(1, width))


def _with_intercept(cov: Optional[np.ndarray], n: int, add_intercept: bool) -> np.ndarray:
    ones = np.ones((n, 1))
    if cov is None:
        return ones
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 1:
        cov = cov.reshape(-1, 1)
    if cov.shape[1] == 0:
        return ones
    return np.column_stack([ones, cov]) if add_intercept else cov


@dataclass(frozen=True)
class FittedModel:
    """Maximum-likelihood estimates and the quantities evaluated at them."""

    beta: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    eta: np.ndarray
    vartheta: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    trace: tuple[float, ...] = ()
    covariance: Optional[np.ndarray] = None
    mean_names: tuple[str, ...] = ()
    precision_names: tuple[str, ...] = ()
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def k(self) -> int:
        return self.beta.shape[0]

    @property
    def q(self) -> int:
        return self.gamma.shape[0]

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.beta, self.gamma])

    @property
    def std_errors(self) -> Optional[np.ndarray]:
        if self.covariance is None:
            return None
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def z_values(self) -> Optional[np.ndarray]:
        se = self.std_errors
        if se is None:
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.params / se

    def summary_frame(self) -> pd.DataFrame:
        """Estimates, standard errors and Wald z statistics, one row per parameter."""
        names = [f"beta:{n}" for n in self.mean_names] + [f"gamma:{n}" for n in self.precision_names]
        if len(names) != self.k + self.q:
            names = [f"beta{j + 1}" for j in range(self.k)] + [f"gamma{j + 1}" for j in range(self.q)]
        se = self.std_errors
        z = self.z_values
        return pd.DataFrame(
            {
                "estimate": self.params,
                "std_error": se if se is not None else np.nan,
                "z_value": z if z is not None else np.nan,
            },
            index=pd.Index(names, name="parameter"),
        )
