"""
PRESS-based prediction measures for beta regression.

At the converged estimate beta is the least-squares solution of the
transformed regression

    y_check = (Phi W)^{1/2} u1   on   X_check = (Phi W)^{1/2} X,
    u1 = eta + W^{-1} T (y* - mu*),

whose ordinary residuals are exactly r_beta. The hat diagonal of that
regression gives closed-form leave-one-out residuals r_t / (1 - h*_tt),
from which PRESS, its combined-residual variant and the prediction
coefficients P^2 = 1 - PRESS / SST_(t) follow.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateLeverageError,
    DomainError,
    EstimationError,
    InconsistencyError,
    UndefinedCoefficientError,
)
from .links import inverse_derivative, link_inverse
from .model import FittedModel, ModelSpec
from .params import resolve_workers
from .residuals import combined_residual, variance_v, working_quantities
from .scoring import FitOptions, fit, fit_null, spd_solve

logger = logging.getLogger(__name__)

DEFAULT_FLAG_MULTIPLE = 3.0


@dataclass(frozen=True)
class TransformedRegression:
    """The weighted regression whose least-squares solution is beta-hat."""

    y_check: np.ndarray
    X_check: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class LeaveOneOut:
    """Raw leave-one-out prediction error over the converged deletion fits."""

    value: float
    n_used: int
    failed: tuple[int, ...] = ()


@dataclass(frozen=True)
class DeletionOracle:
    """Per-observation squared deleted residuals computed two ways."""

    refit_components: np.ndarray
    one_step_components: np.ndarray


@dataclass(frozen=True)
class PredictionReport:
    press: float
    press_bg: float
    p2: float
    p2_bg: float
    r2_lr: Optional[float]
    lambda_: float
    sst_deleted: float
    h_star_diag: np.ndarray
    press_components: np.ndarray
    press_bg_components: np.ndarray
    loo_press_raw: Optional[float] = None
    loo_failed: tuple[int, ...] = field(default_factory=tuple)

    def to_dict(self, components: bool = True) -> dict:
        """JSON-ready mapping; arrays become lists."""
        out = {
            "press": self.press,
            "press_bg": self.press_bg,
            "p2": self.p2,
            "p2_bg": self.p2_bg,
            "r2_lr": self.r2_lr,
            "lambda": self.lambda_,
            "sst_deleted": self.sst_deleted,
            "loo_press_raw": self.loo_press_raw,
        }
        if self.loo_failed:
            out["loo_failed"] = list(self.loo_failed)
        if components:
            out["h_star_diag"] = self.h_star_diag.tolist()
            out["press_components"] = self.press_components.tolist()
            out["press_bg_components"] = self.press_bg_components.tolist()
        return out


def transformed_regression(fit: FittedModel, spec: ModelSpec) -> TransformedRegression:
    """
    Build (y_check, X_check) at the fitted values.

    The weight phi_t w_t equals phi_t^2 v_t / g'(mu_t)^2.
    """
    T = np.asarray(inverse_derivative(spec.mean_link, fit.eta))
    y_star, mu_star, _ = working_quantities(spec.y, fit.mu, fit.phi)
    v = variance_v(fit.mu, fit.phi)
    w = fit.phi * v * T * T
    weights = fit.phi * w
    u1 = fit.eta + T * (y_star - mu_star) / w
    root = np.sqrt(weights)
    return TransformedRegression(
        y_check=root * u1,
        X_check=root[:, None] * spec.X,
        weights=weights,
    )


def hat_diagonal(fit: FittedModel, spec: ModelSpec) -> np.ndarray:
    """
    Diagonal of H* = (W Phi)^{1/2} X (X' Phi W X)^{-1} X' (Phi W)^{1/2}.

    Raises:
        EstimationError: If X' Phi W X is singular
    """
    Xc = transformed_regression(fit, spec).X_check
    K = Xc.T @ Xc
    solved = spd_solve(K, Xc.T, "X' Phi W X")
    h = np.einsum("ij,ji->i", Xc, solved)
    return np.clip(h, 0.0, 1.0)


def _deleted_components(numerator: np.ndarray, h: np.ndarray) -> np.ndarray:
    degenerate = np.flatnonzero(np.isclose(h, 1.0, rtol=0.0, atol=1e-12))
    if degenerate.size:
        t = int(degenerate[0]) + 1
        raise DegenerateLeverageError(
            f"h*_tt = 1 at observation {t}; its deleted residual is undefined",
            index=t,
            hints=["The observation alone determines a parameter; drop it or the covariate"],
        )
    return (numerator / (1.0 - h)) ** 2


def press(fit: FittedModel, spec: ModelSpec, h_star: Optional[np.ndarray] = None) -> tuple[float, np.ndarray]:
    """
    PRESS = sum_t (r_beta_t / (1 - h*_tt))^2 and its components.

    Raises:
        DegenerateLeverageError: If some h*_tt equals one
    """
    h = hat_diagonal(fit, spec) if h_star is None else h_star
    y_star, mu_star, _ = working_quantities(spec.y, fit.mu, fit.phi)
    r_beta = (y_star - mu_star) / np.sqrt(variance_v(fit.mu, fit.phi))
    components = _deleted_components(r_beta, h)
    return float(np.sum(components)), components


def press_beta_gamma(
    fit: FittedModel, spec: ModelSpec, h_star: Optional[np.ndarray] = None
) -> tuple[float, np.ndarray]:
    """PRESS with the standardized combined residual in the numerator."""
    h = hat_diagonal(fit, spec) if h_star is None else h_star
    components = _deleted_components(combined_residual(fit, spec), h)
    return float(np.sum(components)), components


def sst_deleted(fit: FittedModel, spec: ModelSpec) -> float:
    """
    SST_(t) = (n / (n - p))^2 * sum_t (y_check_t - mean(y_check))^2, p = k + q.

    Raises:
        DomainError: If n <= p
    """
    n, p = spec.n, spec.p
    if n <= p:
        raise DomainError(f"SST_(t) needs n > p, got n = {n} and p = {p}")
    y_check = transformed_regression(fit, spec).y_check
    sst = float(np.sum((y_check - y_check.mean()) ** 2))
    return (n / (n - p)) ** 2 * sst


def p2(press_value: float, sst_deleted_value: float) -> float:
    """
    Prediction coefficient 1 - PRESS / SST_(t), in (-inf, 1].

    Raises:
        UndefinedCoefficientError: If SST_(t) is zero

    Examples:
        >>> p2(0.0, 4.0)
        1.0
        >>> p2(8.0, 4.0)
        -1.0
    """
    if not sst_deleted_value > 0.0:
        raise UndefinedCoefficientError(
            "SST_(t) is zero; the prediction coefficient is undefined",
            hints=["The transformed responses are constant"],
        )
    return 1.0 - press_value / sst_deleted_value


def r2_lr(fit: FittedModel, null_fit: FittedModel, n: int) -> float:
    """
    Likelihood-ratio pseudo R^2, 1 - exp((2/n)(loglik_null - loglik_fit)).

    Raises:
        InconsistencyError: If the null model fits better beyond rounding
    """
    diff = null_fit.loglik - fit.loglik
    if diff > 1e-6 * (1.0 + abs(fit.loglik)):
        raise InconsistencyError(
            f"Null model log-likelihood {null_fit.loglik:.6g} exceeds "
            f"the fitted {fit.loglik:.6g}",
            hints=["Check that both fits use the same response and converged"],
        )
    return float(-np.expm1((2.0 / n) * min(diff, 0.0)))


def lambda_ratio(phi) -> float:
    """
    Intensity of nonconstant dispersion, max(phi) / min(phi).

    Examples:
        >>> lambda_ratio([2.0, 8.0])
        4.0
    """
    phi = np.asarray(phi, dtype=float).reshape(-1)
    if phi.size == 0:
        raise DomainError("lambda_ratio needs at least one precision")
    if np.any(~np.isfinite(phi)) or np.any(phi <= 0.0):
        raise DomainError("lambda_ratio needs finite, positive precisions")
    return float(phi.max() / phi.min())


def _deleted_prediction(args) -> Optional[float]:
    spec, options, t = args
    keep = np.arange(spec.n) != t
    try:
        deleted = fit(spec.subset(keep), options)
    except (EstimationError, DomainError, ValueError) as e:
        logger.debug(f"Deletion fit {t + 1} failed: {e}")
        return None
    if not deleted.converged:
        return None
    return float(link_inverse(spec.mean_link, float(spec.X[t] @ deleted.beta)))


def loo_press_raw(
    spec: ModelSpec,
    options: Optional[FitOptions] = None,
    workers: Optional[int] = None,
) -> LeaveOneOut:
    """
    Leave-one-out prediction error on the response scale.

    Refits the model n times without observation t and averages
    (y_t - g^{-1}(x_t' beta_(t)))^2 over the deletions that converged.
    Failed deletions are listed (1-based) and excluded.
    """
    options = options or FitOptions()
    workers = resolve_workers(workers)
    tasks = [(spec, options, t) for t in range(spec.n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            predictions = list(pool.map(_deleted_prediction, tasks))
    else:
        predictions = [_deleted_prediction(task) for task in tasks]

    failed = tuple(t + 1 for t, pred in enumerate(predictions) if pred is None)
    used = [(spec.y[t] - pred) ** 2 for t, pred in enumerate(predictions) if pred is not None]
    if failed:
        logger.warning(f"{len(failed)} of {spec.n} deletion fits failed")
    if not used:
        raise EstimationError("Every deletion fit failed")
    return LeaveOneOut(value=float(np.mean(used)), n_used=len(used), failed=failed)


def deletion_press_oracle(fit: FittedModel, spec: ModelSpec) -> DeletionOracle:
    """
    Squared deleted residuals of the transformed regression, by brute force.

    refit_components re-solve least squares without row t;
    one_step_components use beta_(t) = beta - (X'X)^{-1} x_t e_t / (1 - h_tt).
    Both must match press() componentwise.
    """
    reg = transformed_regression(fit, spec)
    Xc, yc = reg.X_check, reg.y_check
    n = spec.n

    K = Xc.T @ Xc
    beta_check = spd_solve(K, Xc.T @ yc, "X' Phi W X")
    resid = yc - Xc @ beta_check
    K_inv_X = spd_solve(K, Xc.T, "X' Phi W X")
    h = np.einsum("ij,ji->i", Xc, K_inv_X)

    refit = np.empty(n)
    one_step = np.empty(n)
    for t in range(n):
        keep = np.arange(n) != t
        beta_t, *_ = np.linalg.lstsq(Xc[keep], yc[keep], rcond=None)
        refit[t] = (yc[t] - Xc[t] @ beta_t) ** 2
        beta_one = beta_check - K_inv_X[:, t] * resid[t] / (1.0 - h[t])
        one_step[t] = (yc[t] - Xc[t] @ beta_one) ** 2
    return DeletionOracle(refit_components=refit, one_step_components=one_step)


def flag_components(components, multiple: float = DEFAULT_FLAG_MULTIPLE) -> list[int]:
    """
    1-based indices whose component exceeds multiple times the mean component.

    Example:
        >>> flag_components([1.0, 1.0, 1.0, 1.0, 20.0])
        [5]
    """
    components = np.asarray(components, dtype=float)
    if components.size == 0:
        return []
    threshold = multiple * float(np.mean(components))
    return [int(t) + 1 for t in np.flatnonzero(components > threshold)]


def high_leverage(h_star, multiple: float = DEFAULT_FLAG_MULTIPLE) -> list[int]:
    """1-based indices with h*_tt above multiple times the mean leverage k/n."""
    return flag_components(h_star, multiple)


def prediction_report(
    fit: FittedModel,
    spec: ModelSpec,
    null_fit: Optional[FittedModel] = None,
    with_loo: bool = False,
    options: Optional[FitOptions] = None,
    workers: Optional[int] = None,
) -> PredictionReport:
    """
    Every prediction measure of a fit in one report.

    The null model is fitted when not supplied. with_loo adds the raw
    leave-one-out error, which costs n refits.
    """
    h = hat_diagonal(fit, spec)
    press_value, press_comp = press(fit, spec, h)
    press_bg_value, press_bg_comp = press_beta_gamma(fit, spec, h)
    sst = sst_deleted(fit, spec)

    if null_fit is None:
        null_fit = fit_null(spec, options)
    try:
        r2 = r2_lr(fit, null_fit, spec.n)
    except InconsistencyError as e:
        logger.warning(f"R2_LR unavailable: {e}")
        r2 = None

    loo = loo_press_raw(spec, options, workers) if with_loo else None
    return PredictionReport(
        press=press_value,
        press_bg=press_bg_value,
        p2=p2(press_value, sst),
        p2_bg=p2(press_bg_value, sst),
        r2_lr=r2,
        lambda_=lambda_ratio(fit.phi),
        sst_deleted=sst,
        h_star_diag=h,
        press_components=press_comp,
        press_bg_components=press_bg_comp,
        loo_press_raw=loo.value if loo else None,
        loo_failed=loo.failed if loo else (),
    )
