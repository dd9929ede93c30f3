"""
Monte Carlo harness for the prediction measures.

A scenario fixes a true data-generating beta regression (mean range,
fixed precision or dispersion intensity lambda, number of covariates) and
an estimated model that may omit covariates or neglect varying dispersion.
Covariates are drawn once per scenario and kept fixed; each replication
draws a fresh response, fits the estimated model and records P^2, P^2_bg
and R^2_LR.

Randomness is addressed by spawn keys: covariates use (seed, 0) and
replication r uses (seed, 1, r), so serial and parallel runs agree bit for
bit.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import BetaPressError, ConfigurationError
from .links import LinkFunction, link_apply, link_inverse
from .model import ModelSpec
from .params import DEFAULT_SEED, resolve_workers
from .prediction import high_leverage, prediction_report
from .scoring import FitOptions, fit, fit_null
from .special import random_stream, sample_beta

logger = logging.getLogger(__name__)

MU_RANGES = {
    "low": (0.005, 0.12),
    "mid": (0.20, 0.88),
    "high": (0.90, 0.99),
}

# Covariate columns drawn per submodel, whatever the scenario uses
MAX_COVARIATES = 4

STATISTICS = ("p2", "p2_bg", "r2_lr")


class ScenarioConfig(BaseModel):
    """One Monte Carlo design cell."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n: int = Field(ge=2)
    replications: int = Field(default=100, ge=1)
    seed: int = DEFAULT_SEED
    mu_range: Literal["low", "mid", "high"] = "mid"
    phi: Optional[float] = Field(default=None, gt=0.0)
    lambda_: Optional[float] = Field(default=None, alias="lambda", gt=1.0)
    true_mean_covariates: int = Field(default=4, ge=0, le=MAX_COVARIATES)
    true_precision_covariates: int = Field(default=0, ge=0, le=MAX_COVARIATES)
    estimated_mean_covariates: int = Field(default=4, ge=0, le=MAX_COVARIATES)
    estimated_precision_covariates: int = Field(default=0, ge=0, le=MAX_COVARIATES)
    covariate_law: Literal["uniform01", "uniform_half", "student_t3"] = "uniform01"
    replicate_covariate_block: bool = False
    block_size: int = Field(default=40, ge=2)
    calibration_rows: int = Field(default=120, ge=2)
    base_precision: float = Field(default=50.0, gt=0.0)
    mean_link: LinkFunction = LinkFunction.LOGIT
    layout: Optional[str] = None
    scenario: Optional[int] = None

    @model_validator(mode="after")
    def _check_dispersion(self) -> "ScenarioConfig":
        if (self.phi is None) == (self.lambda_ is None):
            raise ValueError("exactly one of phi (fixed) or lambda (varying) must be set")
        if self.lambda_ is not None and self.true_precision_covariates == 0:
            raise ValueError("varying dispersion needs true_precision_covariates >= 1")
        if self.phi is not None and self.true_precision_covariates > 0:
            raise ValueError("fixed dispersion needs true_precision_covariates = 0")
        if not self.mean_link.for_mean:
            raise ValueError(f"{self.mean_link.value} is not a mean link")
        return self

    @classmethod
    def from_mapping(cls, values: dict) -> "ScenarioConfig":
        """
        Build a config, turning pydantic errors into ConfigurationError.

        Raises:
            ConfigurationError: Naming the first offending key
        """
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            first = e.errors()[0]
            key = str(first["loc"][0]) if first.get("loc") else None
            raise ConfigurationError(
                f"Invalid scenario config{f' key {key!r}' if key else ''}: {first['msg']}",
                key=key,
            ) from e

    @property
    def dispersion_label(self) -> str:
        if self.phi is not None:
            return f"phi{self.phi:g}"
        return f"lambda{self.lambda_:g}"

    @property
    def column_label(self) -> str:
        scenario = f"scenario{self.scenario}" if self.scenario is not None else (
            f"k{self.estimated_mean_covariates}q{self.estimated_precision_covariates}"
        )
        return f"{scenario}_{self.dispersion_label}"


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    mean_p2: float
    mean_p2_bg: float
    mean_r2lr: float
    mc_standard_errors: tuple[float, float, float]
    failed_replications: int
    beta_true: np.ndarray = field(default_factory=lambda: np.empty(0))
    gamma_true: np.ndarray = field(default_factory=lambda: np.empty(0))
    mean_high_leverage: Optional[float] = None

    @property
    def means(self) -> tuple[float, float, float]:
        return (self.mean_p2, self.mean_p2_bg, self.mean_r2lr)

    @property
    def converged_replications(self) -> int:
        return self.config.replications - self.failed_replications


def _reference_rows(config: ScenarioConfig) -> int:
    if config.replicate_covariate_block:
        return config.block_size
    return max(config.n, config.calibration_rows)


def reference_covariates(
    config: ScenarioConfig, rng: Optional[np.random.Generator] = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    The covariate block a scenario's designs are cut from, intercepts included.

    Always draws four mean and four precision columns in the same order so
    that scenarios differing only in the covariate counts share covariates.
    Mean covariates are U(0, 1) (U(-0.5, 0.5) for uniform_half; the first
    slope column is t(3) for student_t3); precision covariates are
    U(-0.5, 0.5).

    The block has block_size rows when the block is tiled and otherwise
    max(n, calibration_rows) rows, so untiled designs of every n up to
    calibration_rows are prefixes of one draw.
    """
    rng = rng or random_stream(config.seed, 0)
    m = _reference_rows(config)

    if config.covariate_law == "uniform_half":
        mean_cov = rng.uniform(-0.5, 0.5, size=(m, MAX_COVARIATES))
    else:
        mean_cov = rng.uniform(0.0, 1.0, size=(m, MAX_COVARIATES))
    if config.covariate_law == "student_t3":
        mean_cov[:, 0] = rng.standard_t(3, size=m)
    prec_cov = rng.uniform(-0.5, 0.5, size=(m, MAX_COVARIATES))

    ones = np.ones((m, 1))
    return np.hstack([ones, mean_cov]), np.hstack([ones, prec_cov])


def design_from_reference(
    config: ScenarioConfig, X_ref: np.ndarray, Z_ref: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """First n rows of the reference block, tiled when the block is shorter than n."""
    m = X_ref.shape[0]
    if m >= config.n:
        return X_ref[: config.n], Z_ref[: config.n]
    reps = -(-config.n // m)
    return np.tile(X_ref, (reps, 1))[: config.n], np.tile(Z_ref, (reps, 1))[: config.n]


def generate_covariates(
    config: ScenarioConfig, rng: Optional[np.random.Generator] = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    Fixed covariates of a scenario, intercept columns included.

    Returns:
        (X, Z), each n x 5
    """
    X_ref, Z_ref = reference_covariates(config, rng)
    return design_from_reference(config, X_ref, Z_ref)


def _span(values: np.ndarray, key: str) -> tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        raise ConfigurationError(
            f"Covariates are constant; cannot calibrate {key}",
            key=key,
            hints=["Use a larger n or a different covariate_law"],
        )
    return lo, hi


def calibrate_coefficients(
    config: ScenarioConfig, X: np.ndarray, Z: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    True coefficients reproducing the configured mean range and dispersion.

    All mean slopes are equal and map the smallest and largest covariate sum
    of X onto g(lower) and g(upper), so mu_t over X spans the range exactly.
    For varying dispersion the precision slopes are equal to
    log(lambda) / range over Z, so max phi / min phi = lambda, and the
    intercept puts the geometric midpoint of phi at base_precision.

    run_scenario passes the reference block as X and the design as Z: every
    n then shares one true beta and its mu_t lie inside the range, while
    lambda holds for the design itself.

    Raises:
        ConfigurationError: If the covariates cannot span the target
    """
    lower, upper = MU_RANGES[config.mu_range]
    g_lo = link_apply(config.mean_link, lower)
    g_hi = link_apply(config.mean_link, upper)

    k = config.true_mean_covariates
    if k == 0:
        beta = np.array([0.5 * (g_lo + g_hi)])
    else:
        s_lo, s_hi = _span(X[:, 1 : 1 + k].sum(axis=1), "mu_range")
        slope = (g_hi - g_lo) / (s_hi - s_lo)
        beta = np.concatenate([[g_lo - slope * s_lo], np.full(k, slope)])

    q = config.true_precision_covariates
    if config.phi is not None:
        gamma = np.array([np.log(config.phi)])
    else:
        s_lo, s_hi = _span(Z[:, 1 : 1 + q].sum(axis=1), "lambda")
        slope = np.log(config.lambda_) / (s_hi - s_lo)
        gamma = np.concatenate(
            [[np.log(config.base_precision) - slope * 0.5 * (s_lo + s_hi)], np.full(q, slope)]
        )

    mu = np.asarray(link_inverse(config.mean_link, X[:, : 1 + k] @ beta))
    width = upper - lower
    if abs(mu.min() - lower) > 0.1 * width or abs(mu.max() - upper) > 0.1 * width:
        raise ConfigurationError(
            f"Calibrated means [{mu.min():.4g}, {mu.max():.4g}] miss the range {MU_RANGES[config.mu_range]}",
            key="mu_range",
        )
    return beta, gamma


@dataclass(frozen=True)
class _Replication:
    p2: float
    p2_bg: float
    r2_lr: float
    n_high_leverage: int


def _replicate(args) -> Optional[_Replication]:
    config, X_est, Z_est, mu, phi, r = args
    rng = random_stream(config.seed, 1, r)
    y = sample_beta(mu, phi, rng)
    spec = ModelSpec(y=y, X=X_est, Z=Z_est, mean_link=config.mean_link)
    options = FitOptions()
    try:
        fitted = fit(spec, options)
        if not fitted.converged:
            return None
        null_fit = fit_null(spec, options)
        if not null_fit.converged:
            return None
        report = prediction_report(fitted, spec, null_fit=null_fit, options=options)
    except (BetaPressError, ValueError, ArithmeticError) as e:
        logger.debug(f"Replication {r} failed: {e}")
        return None
    if report.r2_lr is None:
        return None
    return _Replication(
        p2=report.p2,
        p2_bg=report.p2_bg,
        r2_lr=report.r2_lr,
        n_high_leverage=len(high_leverage(report.h_star_diag)),
    )


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return float("nan"), float("nan")
    if values.size == 1:
        return float(values[0]), float("nan")
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def run_scenario(config: ScenarioConfig, workers: Optional[int] = None) -> ScenarioResult:
    """
    Run every replication of a scenario and aggregate in replication order.

    Failed replications (fit error, non-convergence, undefined measure) are
    counted and excluded from the means.
    """
    workers = resolve_workers(workers)
    X_ref, Z_ref = reference_covariates(config)
    X, Z = design_from_reference(config, X_ref, Z_ref)
    beta, gamma = calibrate_coefficients(config, X_ref, Z)

    k_true, q_true = config.true_mean_covariates, config.true_precision_covariates
    mu = np.asarray(link_inverse(config.mean_link, X[:, : 1 + k_true] @ beta))
    phi = np.exp(Z[:, : 1 + q_true] @ gamma)
    X_est = X[:, : 1 + config.estimated_mean_covariates]
    Z_est = Z[:, : 1 + config.estimated_precision_covariates]

    tasks = [(config, X_est, Z_est, mu, phi, r) for r in range(config.replications)]
    if workers > 1 and config.replications > 1:
        chunk = max(1, config.replications // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_replicate, tasks, chunksize=chunk))
    else:
        outcomes = [_replicate(task) for task in tasks]

    done = [o for o in outcomes if o is not None]
    failed = len(outcomes) - len(done)
    if failed:
        logger.warning(
            f"{failed} of {config.replications} replications failed",
            extra={"cell": config.column_label, "n": config.n},
        )

    stats = {name: np.array([getattr(o, name) for o in done]) for name in STATISTICS}
    summary = [_mean_and_se(stats[name]) for name in STATISTICS]
    leverage = (
        float(np.mean([o.n_high_leverage for o in done]))
        if done and config.covariate_law == "student_t3"
        else None
    )
    return ScenarioResult(
        config=config,
        mean_p2=summary[0][0],
        mean_p2_bg=summary[1][0],
        mean_r2lr=summary[2][0],
        mc_standard_errors=(summary[0][1], summary[1][1], summary[2][1]),
        failed_replications=failed,
        beta_true=beta,
        gamma_true=gamma,
        mean_high_leverage=leverage,
    )


def run_grid(configs: Sequence[ScenarioConfig], workers: Optional[int] = None) -> list[ScenarioResult]:
    """Run each cell in order, logging progress per cell."""
    results = []
    total = len(configs)
    for i, config in enumerate(configs, start=1):
        logger.info(
            f"cell {i}/{total}: {config.column_label} n={config.n} mu={config.mu_range} "
            f"law={config.covariate_law} reps={config.replications}"
        )
        results.append(run_scenario(config, workers))
    return results
