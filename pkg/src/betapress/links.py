"""
Link functions for the mean and precision submodels.

logit and loglog map (0, 1) onto the real line and are admissible for the
mean submodel; log maps (0, inf) onto the real line and is the precision
link. All three are strictly increasing and twice differentiable.

    logit:   eta = log(mu / (1 - mu))        mu  = 1 / (1 + exp(-eta))
    loglog:  eta = -log(-log(mu))            mu  = exp(-exp(-eta))
    log:     theta = log(phi)                phi = exp(theta)
"""

from enum import Enum
from typing import Union

import numpy as np
from scipy import special as sp_special

from .errors import DomainError

ArrayLike = Union[float, np.ndarray]

# Open-interval clamp for inverse links
_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


class LinkFunction(str, Enum):
    """Supported link functions."""

    LOGIT = "logit"
    LOGLOG = "loglog"
    LOG = "log"

    @property
    def for_mean(self) -> bool:
        return self in (LinkFunction.LOGIT, LinkFunction.LOGLOG)

    @property
    def for_precision(self) -> bool:
        return self is LinkFunction.LOG


MEAN_LINKS = (LinkFunction.LOGIT, LinkFunction.LOGLOG)
PRECISION_LINKS = (LinkFunction.LOG,)


def _check_domain(link: LinkFunction, value: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{op}({link.value}) requires finite values")
    if link.for_mean:
        if np.any((value <= 0.0) | (value >= 1.0)):
            raise DomainError(
                f"{op}({link.value}) requires values strictly inside (0, 1)",
                hints=["Responses on the boundary need the shrink-boundary transform"],
            )
    elif np.any(value <= 0.0):
        raise DomainError(f"{op}({link.value}) requires values > 0")


def _unwrap(value: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(value) if np.ndim(like) == 0 else value


def link_apply(link: LinkFunction, value: ArrayLike) -> ArrayLike:
    """
    Evaluate g(value).

    Raises:
        DomainError: If value is at or outside the link's domain boundary

    Examples:
        >>> link_apply(LinkFunction.LOGIT, 0.5)
        0.0
        >>> link_apply(LinkFunction.LOG, 1.0)
        0.0
    """
    link = LinkFunction(link)
    arr = np.asarray(value, dtype=float)
    _check_domain(link, arr, "link_apply")

    if link is LinkFunction.LOGIT:
        out = sp_special.logit(arr)
    elif link is LinkFunction.LOGLOG:
        out = -np.log(-np.log(arr))
    else:
        out = np.log(arr)
    return _unwrap(out, value)


def link_inverse(link: LinkFunction, eta: ArrayLike) -> ArrayLike:
    """
    Evaluate g^{-1}(eta), clamped to the open domain.

    Examples:
        >>> link_inverse(LinkFunction.LOGIT, 0.0)
        0.5
        >>> round(link_inverse(LinkFunction.LOGLOG, 0.0), 6)   # exp(-1)
        0.367879
    """
    link = LinkFunction(link)
    arr = np.asarray(eta, dtype=float)

    if link is LinkFunction.LOGIT:
        out = np.clip(sp_special.expit(arr), _EPS, 1.0 - _EPS)
    elif link is LinkFunction.LOGLOG:
        out = np.clip(np.exp(-np.exp(-arr)), _EPS, 1.0 - _EPS)
    else:
        out = np.maximum(np.exp(arr), _TINY)
    return _unwrap(out, eta)


def link_derivative(link: LinkFunction, value: ArrayLike) -> ArrayLike:
    """
    Evaluate g'(value) (or h'(value) for the precision link). Strictly positive.

    Examples:
        >>> link_derivative(LinkFunction.LOGIT, 0.5)
        4.0
        >>> link_derivative(LinkFunction.LOG, 2.0)
        0.5
    """
    link = LinkFunction(link)
    arr = np.asarray(value, dtype=float)
    _check_domain(link, arr, "link_derivative")

    if link is LinkFunction.LOGIT:
        out = 1.0 / (arr * (1.0 - arr))
    elif link is LinkFunction.LOGLOG:
        out = -1.0 / (arr * np.log(arr))
    else:
        out = 1.0 / arr
    return _unwrap(out, value)


def inverse_derivative(link: LinkFunction, eta: ArrayLike) -> ArrayLike:
    """d g^{-1}(eta) / d eta, i.e. 1 / g'(g^{-1}(eta)), evaluated without the round trip."""
    link = LinkFunction(link)
    arr = np.asarray(eta, dtype=float)

    if link is LinkFunction.LOGIT:
        mu = sp_special.expit(arr)
        out = mu * (1.0 - mu)
    elif link is LinkFunction.LOGLOG:
        out = np.exp(-arr - np.exp(-arr))
    else:
        out = np.exp(arr)
    return _unwrap(np.maximum(out, _TINY), eta)
