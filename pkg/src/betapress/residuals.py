"""
Per-observation residual quantities.

Working responses and their moments, the ordinary residuals of the two
scoring schemes (r_beta for the mean, r_gamma for the precision) and the
standardized combined residual built from both numerators.

With T1 = log(y / (1 - y)) and T2 = log(1 - y) the beta law is a canonical
two-parameter exponential family, so

    E(T1) = mu*          = psi(mu phi) - psi((1 - mu) phi)
    E(T2)                = psi((1 - mu) phi) - psi(phi)
    Var(T1) = v          = psi'(mu phi) + psi'((1 - mu) phi)
    Var(T2)              = psi'((1 - mu) phi) - psi'(phi)
    Cov(T1, T2)          = -psi'((1 - mu) phi)

and every variance below is assembled from these.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DomainError, NumericalDegeneracyError
from .model import FittedModel, ModelSpec
from .special import digamma, trigamma

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Moments:
    """Exponential-family moments of (T1, T2) at given (mu, phi)."""

    mean_t1: np.ndarray
    mean_t2: np.ndarray
    var_t1: np.ndarray
    var_t2: np.ndarray
    cov_t1_t2: np.ndarray

    @property
    def v(self) -> np.ndarray:
        return self.var_t1

    @property
    def varsigma(self) -> np.ndarray:
        """Var(a_t) with a_t = mu (T1 - mu*) + T2 - E(T2)."""
        mu = self._mu
        return mu * mu * self.var_t1 + self.var_t2 + 2.0 * mu * self.cov_t1_t2

    @property
    def zeta(self) -> np.ndarray:
        """Var((T1 - mu*) + a_t), assembled from the moments."""
        mu = self._mu
        lead = 1.0 + mu
        return lead * lead * self.var_t1 + self.var_t2 + 2.0 * lead * self.cov_t1_t2

    _mu: np.ndarray = None


def _check_interior(y=None, mu=None, phi=None) -> None:
    if y is not None and np.any((y <= 0.0) | (y >= 1.0)):
        raise DomainError("responses must lie strictly inside (0, 1)")
    if mu is not None and np.any((mu <= 0.0) | (mu >= 1.0)):
        raise DomainError("means must lie strictly inside (0, 1)")
    if phi is not None and np.any(phi <= 0.0):
        raise DomainError("precisions must be positive")


def moment_identities(mu, phi) -> Moments:
    """
    Exponential-family moments of (log(y/(1-y)), log(1-y)) under Beta(mu phi, (1-mu) phi).

    Example:
        >>> m = moment_identities(0.5, 2.0)
        >>> float(m.mean_t1)
        0.0
    """
    mu = np.asarray(mu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    _check_interior(mu=mu, phi=phi)
    a, b = mu * phi, (1.0 - mu) * phi
    tri_a, tri_b, tri_phi = trigamma(a), trigamma(b), trigamma(phi)
    return Moments(
        mean_t1=np.asarray(digamma(a) - digamma(b)),
        mean_t2=np.asarray(digamma(b) - digamma(phi)),
        var_t1=np.asarray(tri_a + tri_b),
        var_t2=np.asarray(tri_b - tri_phi),
        cov_t1_t2=np.asarray(-tri_b),
        _mu=mu,
    )


def variance_v(mu, phi) -> np.ndarray:
    """v_t = psi'(mu phi) + psi'((1 - mu) phi)."""
    mu = np.asarray(mu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return trigamma(mu * phi) + trigamma((1.0 - mu) * phi)


def variance_varsigma(mu, phi) -> np.ndarray:
    """varsigma_t = psi'(mu phi) mu^2 + psi'((1 - mu) phi) (1 - mu)^2 - psi'(phi)."""
    mu = np.asarray(mu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return (
        trigamma(mu * phi) * mu * mu
        + trigamma((1.0 - mu) * phi) * (1.0 - mu) ** 2
        - trigamma(phi)
    )


def variance_zeta(mu, phi) -> np.ndarray:
    """zeta_t = (1 + mu)^2 psi'(mu phi) + mu^2 psi'((1 - mu) phi) - psi'(phi)."""
    mu = np.asarray(mu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return (
        (1.0 + mu) ** 2 * trigamma(mu * phi)
        + mu * mu * trigamma((1.0 - mu) * phi)
        - trigamma(phi)
    )


def working_quantities(y, mu, phi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Working response y*, its mean mu* and the precision-score element a_t.

        y*_t  = log(y_t / (1 - y_t))
        mu*_t = psi(mu_t phi_t) - psi((1 - mu_t) phi_t)
        a_t   = mu_t (y*_t - mu*_t) + log(1 - y_t) - psi((1 - mu_t) phi_t) + psi(phi_t)

    Raises:
        DomainError: If y or mu is outside (0, 1) or phi <= 0
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    _check_interior(y=y, mu=mu, phi=phi)

    psi_b = digamma((1.0 - mu) * phi)
    y_star = np.log(y) - np.log1p(-y)
    mu_star = digamma(mu * phi) - psi_b
    a = mu * (y_star - mu_star) + np.log1p(-y) - psi_b + digamma(phi)
    return y_star, mu_star, a


@dataclass(frozen=True)
class ResidualSet:
    """Per-observation residual quantities evaluated at the fitted (mu, phi)."""

    y_star: np.ndarray
    mu_star: np.ndarray
    a_hat: np.ndarray
    v_hat: np.ndarray
    varsigma_hat: np.ndarray
    zeta_hat: np.ndarray
    r_beta: np.ndarray
    r_gamma: np.ndarray
    r_combined_std: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        """One row per observation, indexed from 1."""
        frame = pd.DataFrame(
            {
                "y_star": self.y_star,
                "mu_star": self.mu_star,
                "a_hat": self.a_hat,
                "v_hat": self.v_hat,
                "varsigma_hat": self.varsigma_hat,
                "zeta_hat": self.zeta_hat,
                "r_beta": self.r_beta,
                "r_gamma": self.r_gamma,
                "r_combined_std": self.r_combined_std,
            }
        )
        frame.index = pd.RangeIndex(1, len(frame) + 1, name="obs")
        return frame


def _check_zeta(zeta: np.ndarray) -> None:
    bad = np.flatnonzero(~(zeta > 0.0))
    if bad.size:
        t = int(bad[0])
        raise NumericalDegeneracyError(
            f"zeta_t <= 0 at observation {t + 1} (zeta = {zeta[t]!r})",
            index=t + 1,
            hints=["Extreme (mu, phi) at this observation; inspect the fitted values"],
        )


def combined_numerator(y, mu, phi) -> np.ndarray:
    """(y*_t - mu*_t) + a_t, the unstandardized combined residual."""
    y_star, mu_star, a = working_quantities(y, mu, phi)
    return (y_star - mu_star) + a


def residuals_beta_gamma(fit: FittedModel, spec: ModelSpec) -> ResidualSet:
    """
    All residual quantities at the fitted values.

        r_beta_t  = (y*_t - mu*_t) / sqrt(v_t)
        r_gamma_t = a_t / sqrt(varsigma_t)
        r_bg_t    = ((y*_t - mu*_t) + a_t) / sqrt(zeta_t)

    Raises:
        NumericalDegeneracyError: If some zeta_t <= 0
    """
    if not fit.converged:
        logger.warning("Residuals computed at a non-converged fit")

    y_star, mu_star, a_hat = working_quantities(spec.y, fit.mu, fit.phi)
    v_hat = variance_v(fit.mu, fit.phi)
    varsigma_hat = variance_varsigma(fit.mu, fit.phi)
    zeta_hat = variance_zeta(fit.mu, fit.phi)
    _check_zeta(zeta_hat)

    diff = y_star - mu_star
    return ResidualSet(
        y_star=y_star,
        mu_star=mu_star,
        a_hat=a_hat,
        v_hat=v_hat,
        varsigma_hat=varsigma_hat,
        zeta_hat=zeta_hat,
        r_beta=diff / np.sqrt(v_hat),
        r_gamma=a_hat / np.sqrt(varsigma_hat),
        r_combined_std=(diff + a_hat) / np.sqrt(zeta_hat),
    )


def combined_residual(fit: FittedModel, spec: ModelSpec) -> np.ndarray:
    """
    Standardized combined residual ((y*_t - mu*_t) + a_t) / sqrt(zeta_t).

    With fixed dispersion phi_t is the same phi at every t.

    Raises:
        NumericalDegeneracyError: If some zeta_t <= 0, naming the observation
    """
    zeta = variance_zeta(fit.mu, fit.phi)
    _check_zeta(zeta)
    return combined_numerator(spec.y, fit.mu, fit.phi) / np.sqrt(zeta)


def residual_frame(fit: FittedModel, spec: ModelSpec) -> pd.DataFrame:
    """residuals_beta_gamma as a DataFrame with y, mu and phi alongside."""
    frame = residuals_beta_gamma(fit, spec).to_frame()
    frame.insert(0, "phi_hat", fit.phi)
    frame.insert(0, "mu_hat", fit.mu)
    frame.insert(0, "y", spec.y)
    return frame
