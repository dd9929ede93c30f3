"""
Maximum-likelihood estimation of beta regressions with varying dispersion.

The mean submodel g(mu_t) = x_t' beta and the precision submodel
h(phi_t) = z_t' gamma are estimated by block-alternating Fisher scoring:

    beta  <- beta  + K_bb^{-1} U_beta
    gamma <- gamma + K_gg^{-1} U_gamma

with the score U_beta = X' Phi T (y* - mu*), U_gamma = Z' H a and the
information blocks K_bb = X' Phi W X, K_bg = X' C T H Z, K_gg = Z' D Z.
K_bg is only needed for the covariance of the estimates.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg

from .errors import DomainError, EstimationError
from .links import (
    inverse_derivative,
    link_apply,
    link_derivative,
    link_inverse,
)
from .model import FittedModel, ModelSpec
from .residuals import variance_v, variance_varsigma, working_quantities
from .special import log_gamma, trigamma
from .validation import validate_spec

logger = logging.getLogger(__name__)

# Clamp for the least-squares start
_START_EPS = 1e-6
# Method-of-moments precision kept inside a sane window
_PHI_START_RANGE = (1e-2, 1e6)


class FitOptions(BaseModel):
    """Controls for the Fisher scoring iterations."""

    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(default=200, ge=1)
    tolerance: float = Field(default=1e-8, gt=0.0)
    step_halving_max: int = Field(default=20, ge=0)


@dataclass(frozen=True)
class ScoreVector:
    u_beta: np.ndarray
    u_gamma: np.ndarray

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.u_beta, self.u_gamma])


@dataclass(frozen=True)
class InformationBlocks:
    """The three blocks of the expected information."""

    K_bb: np.ndarray
    K_bg: np.ndarray
    K_gg: np.ndarray

    def assemble(self) -> np.ndarray:
        return np.block([[self.K_bb, self.K_bg], [self.K_bg.T, self.K_gg]])


@dataclass(frozen=True)
class _Predictors:
    eta: np.ndarray
    vartheta: np.ndarray
    mu: np.ndarray
    phi: np.ndarray


def _predictors(spec: ModelSpec, beta, gamma) -> _Predictors:
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if beta.shape != (spec.k,) or gamma.shape != (spec.q,):
        raise DomainError(
            f"Parameter lengths must be k={spec.k} and q={spec.q}, "
            f"got {beta.shape[0]} and {gamma.shape[0]}"
        )
    eta = spec.X @ beta
    vartheta = spec.Z @ gamma
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(vartheta))):
        raise DomainError("Linear predictors are not finite")
    with np.errstate(over="ignore", under="ignore"):
        mu = np.asarray(link_inverse(spec.mean_link, eta), dtype=float)
        phi = np.asarray(link_inverse(spec.precision_link, vartheta), dtype=float)
    if not np.all(np.isfinite(phi)):
        raise DomainError("Precision overflowed; parameters left the domain")
    return _Predictors(eta=eta, vartheta=vartheta, mu=mu, phi=phi)


def _loglik_at(y: np.ndarray, mu: np.ndarray, phi: np.ndarray) -> float:
    a, b = mu * phi, (1.0 - mu) * phi
    value = float(
        np.sum(
            log_gamma(phi)
            - log_gamma(a)
            - log_gamma(b)
            + (a - 1.0) * np.log(y)
            + (b - 1.0) * np.log1p(-y)
        )
    )
    if not np.isfinite(value):
        raise DomainError("Log-likelihood is not finite at these parameters")
    return value


def log_likelihood(spec: ModelSpec, beta, gamma) -> float:
    """
    Beta log-likelihood sum over observations at (beta, gamma).

    Raises:
        DomainError: If the parameters drive mu or phi out of their domain
    """
    pred = _predictors(spec, beta, gamma)
    return _loglik_at(spec.y, pred.mu, pred.phi)


def _score_at(spec: ModelSpec, pred: _Predictors) -> ScoreVector:
    y_star, mu_star, a = working_quantities(spec.y, pred.mu, pred.phi)
    T = np.asarray(inverse_derivative(spec.mean_link, pred.eta))
    H = np.asarray(inverse_derivative(spec.precision_link, pred.vartheta))
    u_beta = spec.X.T @ (pred.phi * T * (y_star - mu_star))
    u_gamma = spec.Z.T @ (H * a)
    return ScoreVector(u_beta=u_beta, u_gamma=u_gamma)


def score(spec: ModelSpec, beta, gamma) -> ScoreVector:
    """U_beta = X' Phi T (y* - mu*) and U_gamma = Z' H a at (beta, gamma)."""
    return _score_at(spec, _predictors(spec, beta, gamma))


def _information_at(spec: ModelSpec, pred: _Predictors) -> InformationBlocks:
    mu, phi = pred.mu, pred.phi
    T = np.asarray(inverse_derivative(spec.mean_link, pred.eta))
    H = np.asarray(inverse_derivative(spec.precision_link, pred.vartheta))

    v = variance_v(mu, phi)
    w = phi * v * T * T
    c = phi * (trigamma(mu * phi) * mu - trigamma((1.0 - mu) * phi) * (1.0 - mu))
    d = variance_varsigma(mu, phi) * H * H

    X, Z = spec.X, spec.Z
    K_bb = X.T @ ((phi * w)[:, None] * X)
    K_bg = X.T @ ((c * T * H)[:, None] * Z)
    K_gg = Z.T @ (d[:, None] * Z)
    return InformationBlocks(
        K_bb=0.5 * (K_bb + K_bb.T),
        K_bg=K_bg,
        K_gg=0.5 * (K_gg + K_gg.T),
    )


def information(spec: ModelSpec, beta, gamma) -> InformationBlocks:
    """
    Expected information blocks at (beta, gamma).

    Per observation:
        w_t = phi_t v_t / g'(mu_t)^2
        c_t = phi_t (psi'(mu_t phi_t) mu_t - psi'((1 - mu_t) phi_t) (1 - mu_t))
        d_t = varsigma_t / h'(phi_t)^2
    """
    return _information_at(spec, _predictors(spec, beta, gamma))


def full_information(spec: ModelSpec, beta, gamma) -> np.ndarray:
    """The (k+q) x (k+q) information matrix assembled from its three blocks."""
    return information(spec, beta, gamma).assemble()


def spd_solve(K: np.ndarray, rhs: np.ndarray, what: str = "information block") -> np.ndarray:
    """
    Solve K x = rhs for symmetric positive-definite K.

    A failed Cholesky factorization is retried once with a diagonal jitter
    of 1e-10 * trace(K) / dim.

    Raises:
        EstimationError: If K stays singular after the jitter retry
    """
    try:
        return linalg.cho_solve(linalg.cho_factor(K, lower=True), rhs)
    except (linalg.LinAlgError, ValueError):
        pass

    dim = K.shape[0]
    jitter = 1e-10 * float(np.trace(K)) / dim
    logger.debug(f"Cholesky failed on {what}; retrying with jitter {jitter:.3e}")
    try:
        return linalg.cho_solve(linalg.cho_factor(K + jitter * np.eye(dim), lower=True), rhs)
    except (linalg.LinAlgError, ValueError) as e:
        raise EstimationError(
            f"Singular {what} ({dim}x{dim})",
            hints=["Check the design matrices for collinear columns"],
        ) from e


def initialize(spec: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """
    Least-squares starting values.

    beta0 regresses g(y) (y clamped to [1e-6, 1 - 1e-6]) on X. gamma0 sets
    the precision intercept from the moment estimate
    mean(mu~ (1 - mu~) / sigma~^2 - 1), with sigma~^2 the residual variance
    carried back to the response scale; the other components are 0.

    Raises:
        EstimationError: If X is rank deficient
    """
    y = np.clip(spec.y, _START_EPS, 1.0 - _START_EPS)
    z = np.asarray(link_apply(spec.mean_link, y))
    beta0, _, rank, _ = np.linalg.lstsq(spec.X, z, rcond=None)
    if rank < spec.k:
        raise EstimationError(
            f"Mean design has rank {rank} < k = {spec.k}",
            hints=["Drop linearly dependent mean covariates"],
        )

    eta0 = spec.X @ beta0
    mu0 = np.asarray(link_inverse(spec.mean_link, eta0))
    resid = z - eta0
    dof = max(spec.n - spec.k, 1)
    sigma2 = float(resid @ resid) / dof

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        sigma2_t = sigma2 / np.asarray(link_derivative(spec.mean_link, mu0)) ** 2
        phi0 = float(np.mean(mu0 * (1.0 - mu0) / sigma2_t - 1.0))
    if not np.isfinite(phi0) or phi0 <= 0.0:
        phi0 = 1.0 if not np.isinf(phi0) else _PHI_START_RANGE[1]
    phi0 = float(np.clip(phi0, *_PHI_START_RANGE))

    gamma0 = np.zeros(spec.q)
    gamma0[0] = link_apply(spec.precision_link, phi0)
    logger.debug(f"Start values: beta0={beta0}, phi0={phi0:.4g}")
    return beta0, gamma0


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.max(np.abs(new - old)) / (1.0 + np.max(np.abs(old))))


def block_settled(change: float, proposed: float, halvings: int, tolerance: float) -> bool:
    """
    Whether one parameter block has met the convergence tolerance.

    A block that moved must have moved less than tolerance. A block whose
    every halved step was rejected only counts as settled when its proposed
    scoring step was itself below sqrt(tolerance).
    """
    if halvings < 0:
        return proposed < np.sqrt(tolerance)
    return change < tolerance


def _accepts(candidate: float, current: float) -> bool:
    return candidate >= current - 1e-10 * (1.0 + abs(current))


def _block_step(
    spec: ModelSpec,
    beta: np.ndarray,
    gamma: np.ndarray,
    loglik: float,
    block: str,
    options: FitOptions,
) -> tuple[np.ndarray, np.ndarray, float, float, int]:
    """
    One scoring update of a single block with step halving.

    Returns:
        (beta, gamma, loglik, proposed relative step, halvings); the
        parameters are unchanged when no halved step was accepted, in which
        case halvings is reported as -1
    """
    pred = _predictors(spec, beta, gamma)
    sc = _score_at(spec, pred)
    info = _information_at(spec, pred)
    if block == "beta":
        delta = spd_solve(info.K_bb, sc.u_beta, "K_bb")
        base = beta
    else:
        delta = spd_solve(info.K_gg, sc.u_gamma, "K_gg")
        base = gamma
    proposed = float(np.max(np.abs(delta)) / (1.0 + np.max(np.abs(base))))

    step = 1.0
    for halvings in range(options.step_halving_max + 1):
        candidate = base + step * delta
        b, g = (candidate, gamma) if block == "beta" else (beta, candidate)
        try:
            ll = log_likelihood(spec, b, g)
        except DomainError:
            ll = None
        if ll is not None and _accepts(ll, loglik):
            return b, g, ll, proposed, halvings
        step *= 0.5
    return beta, gamma, loglik, proposed, -1


def _covariance(spec: ModelSpec, beta: np.ndarray, gamma: np.ndarray) -> Optional[np.ndarray]:
    K = full_information(spec, beta, gamma)
    try:
        return spd_solve(K, np.eye(K.shape[0]), "full information")
    except EstimationError:
        logger.warning("Full information matrix is singular; standard errors unavailable")
        return None


def fit(spec: ModelSpec, options: Optional[FitOptions] = None) -> FittedModel:
    """
    Fit a beta regression by block-alternating Fisher scoring.

    Each iteration updates beta with gamma held fixed and then gamma at the
    new beta. A step that lowers the log-likelihood or leaves the parameter
    domain is halved up to options.step_halving_max times. Iteration stops
    once the beta and gamma blocks each satisfy block_settled.

    Args:
        spec: Validated model specification
        options: Iteration controls (defaults: 200 iterations, tol 1e-8)

    Returns:
        FittedModel with converged=False and the last accepted iterate when
        the iteration limit is reached

    Raises:
        SpecValidationError: If the spec violates its invariants
        EstimationError: If an information block is singular
    """
    options = options or FitOptions()
    validate_spec(spec).raise_if_failed()

    beta, gamma = initialize(spec)
    try:
        loglik = log_likelihood(spec, beta, gamma)
    except DomainError as e:
        raise EstimationError(
            "Starting values give a non-finite log-likelihood",
            hints=["Check the response for values extremely close to 0 or 1"],
        ) from e

    trace = [loglik]
    converged = False
    iterations = 0
    for iterations in range(1, options.max_iterations + 1):
        new_beta, _, loglik, prop_b, halved_b = _block_step(
            spec, beta, gamma, loglik, "beta", options
        )
        _, new_gamma, loglik, prop_g, halved_g = _block_step(
            spec, new_beta, gamma, loglik, "gamma", options
        )
        change_b = _relative_change(new_beta, beta)
        change_g = _relative_change(new_gamma, gamma)
        beta, gamma = new_beta, new_gamma
        trace.append(loglik)

        logger.debug(
            f"iteration {iterations}: loglik={loglik:.10g} change={max(change_b, change_g):.3e}",
            extra={"halvings_beta": halved_b, "halvings_gamma": halved_g},
        )

        settled_b = block_settled(change_b, prop_b, halved_b, options.tolerance)
        settled_g = block_settled(change_g, prop_g, halved_g, options.tolerance)
        if settled_b and settled_g:
            converged = True
            break
        if halved_b < 0 and halved_g < 0:
            # Neither block can move and at least one still wants to
            break

    warnings = []
    if not converged:
        msg = f"Fisher scoring did not converge after {iterations} iterations"
        logger.warning(msg)
        warnings.append(msg)

    pred = _predictors(spec, beta, gamma)
    return FittedModel(
        beta=beta,
        gamma=gamma,
        mu=pred.mu,
        phi=pred.phi,
        eta=pred.eta,
        vartheta=pred.vartheta,
        loglik=loglik,
        iterations=iterations,
        converged=converged,
        trace=tuple(trace),
        covariance=_covariance(spec, beta, gamma),
        mean_names=spec.mean_names,
        precision_names=spec.precision_names,
        warnings=tuple(warnings),
    )


def fit_null(spec: ModelSpec, options: Optional[FitOptions] = None) -> FittedModel:
    """Fit the intercept-only mean and precision model on spec's response."""
    return fit(spec.null_model(), options)
