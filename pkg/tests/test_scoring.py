"""Log-likelihood, score, information and Fisher scoring."""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from betapress.errors import DomainError, EstimationError, SpecValidationError
from betapress.links import LinkFunction, inverse_derivative
from betapress.model import ModelSpec
from betapress.residuals import variance_v, variance_varsigma, working_quantities
from betapress.scoring import (
    FitOptions,
    block_settled,
    fit,
    fit_null,
    full_information,
    information,
    initialize,
    log_likelihood,
    score,
    spd_solve,
)
from betapress.special import random_stream

from conftest import TIGHT, simulate_spec


def _numeric_score(spec, beta, gamma, step=1e-5):
    params = np.concatenate([beta, gamma])
    grad = np.empty_like(params)
    for j in range(params.size):
        h = step * (1.0 + abs(params[j]))
        up, down = params.copy(), params.copy()
        up[j] += h
        down[j] -= h
        ll_up = log_likelihood(spec, up[: spec.k], up[spec.k :])
        ll_down = log_likelihood(spec, down[: spec.k], down[spec.k :])
        grad[j] = (ll_up - ll_down) / (2.0 * h)
    return grad


@pytest.mark.unit
class TestLogLikelihood:
    def test_matches_scipy_beta_logpdf(self, varying_spec):
        from scipy import stats

        beta = np.array([-0.3, 1.0])
        gamma = np.array([3.0, 1.0])
        mu = 1.0 / (1.0 + np.exp(-(varying_spec.X @ beta)))
        phi = np.exp(varying_spec.Z @ gamma)
        expected = stats.beta.logpdf(varying_spec.y, mu * phi, (1.0 - mu) * phi).sum()
        assert log_likelihood(varying_spec, beta, gamma) == pytest.approx(expected, rel=1e-10)

    def test_wrong_parameter_length(self, varying_spec):
        with pytest.raises(DomainError):
            log_likelihood(varying_spec, np.zeros(3), np.zeros(2))

    def test_overflowing_precision(self, varying_spec):
        with pytest.raises(DomainError):
            log_likelihood(varying_spec, np.zeros(2), np.array([800.0, 0.0]))


@pytest.mark.unit
@pytest.mark.critical
class TestScore:
    @pytest.mark.parametrize("link", [LinkFunction.LOGIT, LinkFunction.LOGLOG])
    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_matches_finite_differences(self, link, seed):
        """Analytic score of both blocks equals central differences at random interior points."""
        spec = simulate_spec(50, seed=seed, beta=(0.2, -0.8, 0.5), gamma=(3.0, 1.2), mean_link=link)
        rng = random_stream(seed, 99)
        for _ in range(5):
            beta = rng.normal(0.0, 0.5, size=spec.k)
            gamma = np.array([rng.uniform(1.0, 4.0), rng.normal(0.0, 0.5)])
            analytic = score(spec, beta, gamma).stacked
            numeric = _numeric_score(spec, beta, gamma)
            assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-5 * (1.0 + np.abs(numeric).max()))

    def test_stacked_layout(self, varying_spec):
        sc = score(varying_spec, np.zeros(2), np.array([3.0, 0.0]))
        assert sc.stacked.shape == (4,)
        assert_allclose(sc.stacked[:2], sc.u_beta)


@pytest.mark.unit
class TestInformation:
    def test_blocks_shapes_and_symmetry(self, varying_spec):
        blocks = information(varying_spec, np.zeros(2), np.array([3.0, 0.5]))
        assert blocks.K_bb.shape == (2, 2)
        assert blocks.K_bg.shape == (2, 2)
        assert blocks.K_gg.shape == (2, 2)
        K = full_information(varying_spec, np.zeros(2), np.array([3.0, 0.5]))
        assert_allclose(K, K.T)
        assert np.all(np.linalg.eigvalsh(K) > 0.0)

    @pytest.mark.monte_carlo
    def test_equals_score_covariance(self):
        """Expected information is the covariance of the score under the model."""
        from betapress.links import link_inverse
        from betapress.special import sample_beta

        base = simulate_spec(30, seed=5, beta=(0.3, -1.0), gamma=(2.5, 1.0))
        beta, gamma = np.array([0.3, -1.0]), np.array([2.5, 1.0])
        mu = np.asarray(link_inverse(base.mean_link, base.X @ beta))
        phi = np.exp(base.Z @ gamma)
        rng = random_stream(77)
        scores = []
        for _ in range(4000):
            spec = ModelSpec(y=sample_beta(mu, phi, rng), X=base.X, Z=base.Z)
            scores.append(score(spec, beta, gamma).stacked)
        empirical = np.cov(np.array(scores), rowvar=False)
        K = full_information(base, beta, gamma)
        scale = np.sqrt(np.outer(np.diag(K), np.diag(K)))
        assert np.max(np.abs(empirical - K) / scale) < 0.1

    def test_spd_solve(self):
        K = np.array([[4.0, 1.0], [1.0, 3.0]])
        x = spd_solve(K, np.array([1.0, 2.0]))
        assert_allclose(K @ x, [1.0, 2.0])

    def test_spd_solve_singular(self):
        with pytest.raises(EstimationError):
            spd_solve(np.zeros((2, 2)), np.ones(2))


@pytest.mark.unit
class TestInitialize:
    def test_start_values(self, fixed_spec):
        beta0, gamma0 = initialize(fixed_spec)
        assert beta0.shape == (2,)
        assert gamma0.shape == (1,)
        assert np.log(1e-2) <= gamma0[0] <= np.log(1e6)

    def test_rank_deficient_mean_design(self):
        x = np.linspace(0.0, 1.0, 10)
        spec = ModelSpec(
            y=np.linspace(0.1, 0.9, 10),
            X=np.column_stack([np.ones(10), x, x]),
            Z=np.ones((10, 1)),
        )
        with pytest.raises(EstimationError):
            initialize(spec)


@pytest.mark.integration
@pytest.mark.critical
class TestFit:
    def test_converges_and_is_stationary(self, varying_spec, varying_fit):
        assert varying_fit.converged
        sc = score(varying_spec, varying_fit.beta, varying_fit.gamma)
        assert np.max(np.abs(sc.stacked)) < 1e-5

    def test_trace_non_decreasing(self, varying_fit):
        trace = np.array(varying_fit.trace)
        assert np.all(np.diff(trace) >= -1e-9 * (1.0 + np.abs(trace[:-1])))
        assert varying_fit.loglik == trace[-1]

    def test_fitted_values(self, varying_spec, varying_fit):
        assert varying_fit.mu.shape == (varying_spec.n,)
        assert np.all((varying_fit.mu > 0.0) & (varying_fit.mu < 1.0))
        assert np.all(varying_fit.phi > 0.0)
        assert_allclose(varying_fit.eta, varying_spec.X @ varying_fit.beta)
        assert_allclose(varying_fit.phi, np.exp(varying_spec.Z @ varying_fit.gamma))

    def test_standard_errors(self, varying_fit):
        se = varying_fit.std_errors
        assert se is not None and se.shape == (4,)
        assert np.all(se > 0.0)
        frame = varying_fit.summary_frame()
        assert list(frame.columns) == ["estimate", "std_error", "z_value"]
        assert frame.index[0] == "beta:(Intercept)"
        assert frame.index[-1] == "gamma:z1"

    def test_fixed_dispersion_recovers_precision(self, fixed_fit):
        assert fixed_fit.converged
        assert fixed_fit.q == 1
        assert np.ptp(fixed_fit.phi) == 0.0
        assert abs(fixed_fit.gamma[0] - np.log(30.0)) < 0.6

    def test_loglog_link(self):
        spec = simulate_spec(120, seed=21, beta=(0.4, 1.0), mean_link=LinkFunction.LOGLOG)
        fitted = fit(spec, TIGHT)
        assert fitted.converged
        assert abs(fitted.beta[1] - 1.0) < 0.6

    def test_iteration_limit(self, varying_spec, caplog):
        with caplog.at_level(logging.WARNING, logger="betapress.scoring"):
            fitted = fit(varying_spec, FitOptions(max_iterations=1))
        assert not fitted.converged
        assert fitted.iterations == 1
        assert fitted.warnings
        assert "did not converge" in caplog.text

    def test_invalid_spec(self):
        spec = ModelSpec(y=[0.2, 1.0, 0.4, 0.5, 0.6], X=np.ones((5, 1)), Z=np.ones((5, 1)))
        with pytest.raises(SpecValidationError):
            fit(spec)

    def test_null_fit_is_nested(self, varying_spec, varying_fit):
        null = fit_null(varying_spec, TIGHT)
        assert null.converged
        assert (null.k, null.q) == (1, 1)
        assert null.loglik <= varying_fit.loglik + 1e-8

    def test_options_are_frozen_and_validated(self):
        with pytest.raises(ValueError):
            FitOptions(tolerance=0.0)
        options = FitOptions()
        with pytest.raises(ValueError):
            options.max_iterations = 3

    @pytest.mark.slow
    def test_parameter_recovery(self):
        """Large-sample fixed-dispersion fit lands close to the truth."""
        beta_true = np.array([1.0, -1.0, 0.5])
        spec = simulate_spec(2000, seed=2014, beta=tuple(beta_true), gamma=(np.log(50.0),))
        fitted = fit(spec)
        assert fitted.converged
        assert np.max(np.abs(fitted.beta - beta_true)) < 0.1
        assert abs(fitted.gamma[0] - np.log(50.0)) < 0.15


class TestBlockSettled:
    def test_moving_block_uses_change(self):
        assert block_settled(1e-9, 1e-9, 0, 1e-8)
        assert not block_settled(1e-6, 4e-6, 2, 1e-8)

    def test_stalled_block_needs_small_proposal(self):
        # parameters unchanged, so change is 0, yet the scoring step was large
        assert not block_settled(0.0, 1e-3, -1, 1e-8)
        assert block_settled(0.0, 1e-5, -1, 1e-8)

    def test_converged_fit_has_both_blocks_still(self, varying_spec, varying_fit):
        info = information(varying_spec, varying_fit.beta, varying_fit.gamma)
        sc = score(varying_spec, varying_fit.beta, varying_fit.gamma)
        step_b = np.linalg.solve(info.K_bb, sc.u_beta)
        step_g = np.linalg.solve(info.K_gg, sc.u_gamma)
        assert np.max(np.abs(step_b)) < 1e-6 * (1.0 + np.max(np.abs(varying_fit.beta)))
        assert np.max(np.abs(step_g)) < 1e-6 * (1.0 + np.max(np.abs(varying_fit.gamma)))


class TestFixedPoint:
    """The estimates reproduce themselves as weighted least-squares solutions."""

    def test_beta_is_weighted_least_squares_of_working_response(self, varying_spec, varying_fit):
        mu, phi = varying_fit.mu, varying_fit.phi
        y_star, mu_star, _ = working_quantities(varying_spec.y, mu, phi)
        T = np.asarray(inverse_derivative(LinkFunction.LOGIT, varying_fit.eta))
        assert_allclose(T, mu * (1.0 - mu))
        w = phi * variance_v(mu, phi) * T**2
        u1 = varying_fit.eta + (y_star - mu_star) / (phi * variance_v(mu, phi) * T)
        X = varying_spec.X
        weights = (phi * w)[:, None]
        beta = np.linalg.solve(X.T @ (weights * X), X.T @ (weights[:, 0] * u1))
        assert_allclose(beta, varying_fit.beta, rtol=1e-6, atol=1e-8)

    def test_gamma_is_weighted_least_squares_of_working_response(self, varying_spec, varying_fit):
        mu, phi = varying_fit.mu, varying_fit.phi
        _, _, a = working_quantities(varying_spec.y, mu, phi)
        varsigma = variance_varsigma(mu, phi)
        d = varsigma * phi**2
        u2 = varying_fit.vartheta + a / (varsigma * phi)
        Z = varying_spec.Z
        gamma = np.linalg.solve(Z.T @ (d[:, None] * Z), Z.T @ (d * u2))
        assert_allclose(gamma, varying_fit.gamma, rtol=1e-6, atol=1e-8)
