"""Monte Carlo scenarios: configs, covariates, calibration and replications."""

import numpy as np
import pytest

from betapress.errors import ConfigurationError
from betapress.links import LinkFunction, link_inverse
from betapress.simulation import (
    MU_RANGES,
    ScenarioConfig,
    calibrate_coefficients,
    design_from_reference,
    generate_covariates,
    reference_covariates,
    run_grid,
    run_scenario,
)


def _config(**values) -> ScenarioConfig:
    values.setdefault("n", 40)
    if "lambda" not in values and "phi" not in values:
        values["phi"] = 50.0
    return ScenarioConfig.from_mapping(values)


def _varying(**values) -> ScenarioConfig:
    values.setdefault("true_precision_covariates", 2)
    values.setdefault("estimated_precision_covariates", 2)
    values.setdefault("true_mean_covariates", 2)
    values.setdefault("estimated_mean_covariates", 2)
    return _config(**{"lambda": 20.0, **values})


@pytest.mark.unit
class TestScenarioConfig:
    def test_defaults(self):
        config = _config()
        assert config.replications == 100
        assert config.mu_range == "mid"
        assert config.mean_link is LinkFunction.LOGIT

    def test_labels(self):
        assert _config(scenario=4).column_label == "scenario4_phi50"
        assert _varying(scenario=6).column_label == "scenario6_lambda20"
        assert _config(estimated_mean_covariates=2).column_label == "k2q0_phi50"

    def test_lambda_alias_and_field_name(self):
        by_alias = ScenarioConfig.model_validate(
            {"n": 40, "lambda": 50.0, "true_precision_covariates": 1}
        )
        by_name = ScenarioConfig(n=40, lambda_=50.0, true_precision_covariates=1)
        assert by_alias.lambda_ == by_name.lambda_ == 50.0

    def test_needs_exactly_one_dispersion(self):
        with pytest.raises(ConfigurationError):
            ScenarioConfig.from_mapping({"n": 40})
        with pytest.raises(ConfigurationError):
            ScenarioConfig.from_mapping({"n": 40, "phi": 50.0, "lambda": 20.0, "true_precision_covariates": 1})

    def test_lambda_needs_precision_covariates(self):
        with pytest.raises(ConfigurationError):
            ScenarioConfig.from_mapping({"n": 40, "lambda": 20.0})

    def test_phi_forbids_precision_covariates(self):
        with pytest.raises(ConfigurationError):
            _config(true_precision_covariates=1)

    def test_error_names_key(self):
        with pytest.raises(ConfigurationError) as exc:
            _config(n=1)
        assert exc.value.key == "n"
        with pytest.raises(ConfigurationError) as exc:
            _config(mu_range="extreme")
        assert exc.value.key == "mu_range"

    def test_rejects_precision_link_for_mean(self):
        with pytest.raises(ConfigurationError):
            _config(mean_link="log")

    def test_frozen(self):
        with pytest.raises(ValueError):
            _config().n = 80


@pytest.mark.unit
class TestCovariates:
    def test_shapes_and_intercepts(self):
        X, Z = generate_covariates(_config(n=30))
        assert X.shape == (30, 5) and Z.shape == (30, 5)
        assert np.all(X[:, 0] == 1.0) and np.all(Z[:, 0] == 1.0)

    def test_laws(self):
        X, Z = generate_covariates(_config(n=500))
        assert X[:, 1:].min() >= 0.0 and X[:, 1:].max() <= 1.0
        assert np.abs(Z[:, 1:]).max() <= 0.5
        X_half, _ = generate_covariates(_config(n=500, covariate_law="uniform_half"))
        assert np.abs(X_half[:, 1:]).max() <= 0.5
        X_t, _ = generate_covariates(_config(n=500, covariate_law="student_t3"))
        assert np.abs(X_t[:, 1]).max() > 1.0

    def test_seeded(self):
        a = generate_covariates(_config(seed=5))
        b = generate_covariates(_config(seed=5))
        c = generate_covariates(_config(seed=6))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        assert not np.array_equal(a[0], c[0])

    def test_shared_across_covariate_counts(self):
        """Scenarios differing only in covariate counts see the same covariates."""
        a, _ = generate_covariates(_config(estimated_mean_covariates=1))
        b, _ = generate_covariates(_config(estimated_mean_covariates=4))
        assert np.array_equal(a, b)

    def test_block_replication(self):
        X, Z = generate_covariates(_config(n=100, replicate_covariate_block=True, block_size=40))
        assert X.shape == (100, 5)
        assert np.array_equal(X[:40], X[40:80])
        assert np.array_equal(Z[:20], Z[80:100])

    def test_designs_are_prefixes_of_reference_block(self):
        X_ref, Z_ref = reference_covariates(_config(n=40))
        assert X_ref.shape == (120, 5) and Z_ref.shape == (120, 5)
        X40, Z40 = generate_covariates(_config(n=40))
        X120, Z120 = generate_covariates(_config(n=120))
        assert np.array_equal(X40, X120[:40])
        assert np.array_equal(Z40, Z120[:40])
        assert np.array_equal(X120, X_ref)

    def test_reference_grows_past_calibration_rows(self):
        X_ref, _ = reference_covariates(_config(n=200))
        assert X_ref.shape[0] == 200

    def test_tiled_reference_is_one_block(self):
        config = _config(n=100, replicate_covariate_block=True, block_size=40)
        X_ref, Z_ref = reference_covariates(config)
        assert X_ref.shape == (40, 5)
        X, _ = design_from_reference(config, X_ref, Z_ref)
        assert np.array_equal(X[80:], X_ref[:20])


@pytest.mark.unit
@pytest.mark.critical
class TestCalibration:
    @pytest.mark.parametrize("mu_range", list(MU_RANGES))
    @pytest.mark.parametrize("link", [LinkFunction.LOGIT, LinkFunction.LOGLOG])
    def test_means_span_range(self, mu_range, link):
        config = _config(n=60, mu_range=mu_range, mean_link=link)
        X, Z = generate_covariates(config)
        beta, gamma = calibrate_coefficients(config, X, Z)
        mu = np.asarray(link_inverse(link, X @ beta))
        lower, upper = MU_RANGES[mu_range]
        assert mu.min() == pytest.approx(lower, rel=1e-9)
        assert mu.max() == pytest.approx(upper, rel=1e-9)
        assert gamma.shape == (1,)
        assert gamma[0] == pytest.approx(np.log(50.0))

    def test_equal_slopes(self):
        config = _config(n=60)
        X, Z = generate_covariates(config)
        beta, _ = calibrate_coefficients(config, X, Z)
        assert beta.shape == (5,)
        assert np.all(beta[1:] == beta[1])

    @pytest.mark.parametrize("lam", [20.0, 50.0, 100.0])
    def test_dispersion_intensity(self, lam):
        config = _varying(n=60, **{"lambda": lam})
        X, Z = generate_covariates(config)
        _, gamma = calibrate_coefficients(config, X, Z)
        phi = np.exp(Z[:, :3] @ gamma)
        assert phi.max() / phi.min() == pytest.approx(lam, rel=1e-9)
        assert np.sqrt(phi.max() * phi.min()) == pytest.approx(config.base_precision, rel=1e-9)

    def test_intercept_only_truth(self):
        config = _config(true_mean_covariates=0, estimated_mean_covariates=0)
        X, Z = generate_covariates(config)
        beta, _ = calibrate_coefficients(config, X, Z)
        assert beta.shape == (1,)

    def test_constant_covariates(self):
        config = _config(n=10)
        with pytest.raises(ConfigurationError) as exc:
            calibrate_coefficients(config, np.ones((10, 5)), np.ones((10, 5)))
        assert exc.value.key == "mu_range"

    def test_true_beta_shared_across_sample_sizes(self):
        small = run_scenario(_config(n=40, replications=1, scenario=4))
        large = run_scenario(_config(n=120, replications=1, scenario=4))
        assert np.array_equal(small.beta_true, large.beta_true)

    @pytest.mark.parametrize("mu_range", list(MU_RANGES))
    def test_small_design_stays_inside_range(self, mu_range):
        config = _config(n=40, mu_range=mu_range)
        X_ref, Z_ref = reference_covariates(config)
        X, _ = design_from_reference(config, X_ref, Z_ref)
        beta, _ = calibrate_coefficients(config, X_ref, Z_ref)
        mu = np.asarray(link_inverse(config.mean_link, X @ beta))
        lower, upper = MU_RANGES[mu_range]
        assert mu.min() >= lower - 1e-12 and mu.max() <= upper + 1e-12


@pytest.mark.integration
@pytest.mark.monte_carlo
class TestRunScenario:
    def test_small_run(self):
        config = _config(n=40, replications=6, scenario=4)
        result = run_scenario(config)
        assert result.converged_replications + result.failed_replications == 6
        assert result.converged_replications > 0
        assert all(np.isfinite(m) for m in result.means)
        assert result.mean_p2 <= 1.0 and 0.0 <= result.mean_r2lr < 1.0
        assert result.beta_true.shape == (5,)
        assert result.mean_high_leverage is None

    def test_reproducible(self):
        config = _config(n=30, replications=4)
        first = run_scenario(config)
        second = run_scenario(config)
        assert first.means == second.means
        assert first.mc_standard_errors == second.mc_standard_errors

    def test_varying_dispersion(self):
        result = run_scenario(_varying(n=50, replications=4, scenario=6))
        assert np.isfinite(result.mean_p2_bg)
        assert result.gamma_true.shape == (3,)

    def test_neglected_dispersion(self):
        result = run_scenario(_varying(n=50, replications=4, estimated_precision_covariates=0))
        assert np.isfinite(result.mean_p2)

    def test_leverage_design_counts(self):
        result = run_scenario(_config(n=40, replications=4, covariate_law="student_t3"))
        assert result.mean_high_leverage is not None
        assert result.mean_high_leverage >= 0.0

    def test_single_replication_has_no_standard_error(self):
        result = run_scenario(_config(n=40, replications=1))
        if result.failed_replications == 0:
            assert np.isnan(result.mc_standard_errors[0])

    @pytest.mark.slow
    def test_parallel_matches_serial(self):
        config = _config(n=30, replications=8)
        assert run_scenario(config, workers=1).means == run_scenario(config, workers=2).means

    def test_grid_keeps_order(self):
        configs = [_config(n=30, replications=2, phi=phi) for phi in (50.0, 150.0)]
        results = run_grid(configs)
        assert [r.config.phi for r in results] == [50.0, 150.0]

    def test_more_precision_predicts_better(self):
        low = run_scenario(_config(n=40, replications=20, phi=20.0))
        high = run_scenario(_config(n=40, replications=20, phi=400.0))
        assert high.mean_p2 > low.mean_p2
        assert high.mean_r2lr > low.mean_r2lr


@pytest.mark.integration
@pytest.mark.monte_carlo
class TestScenarioPatterns:
    """Qualitative patterns of the omitted-covariate designs at a small replication count."""

    def test_omitting_covariates_lowers_every_statistic(self):
        results = [
            run_scenario(
                _config(
                    n=40,
                    phi=150.0,
                    replications=30,
                    scenario=s,
                    true_mean_covariates=4,
                    estimated_mean_covariates=s,
                )
            )
            for s in (1, 2, 3, 4)
        ]
        for stat in range(3):
            means = [r.means[stat] for r in results]
            assert all(b > a for a, b in zip(means, means[1:])), means

    @pytest.mark.parametrize("mu_range", ["low", "high"])
    def test_combined_variant_tracks_p2_at_extreme_means(self, mu_range):
        result = run_scenario(_config(n=40, phi=150.0, replications=20, scenario=4, mu_range=mu_range))
        assert result.converged_replications > 0
        assert result.mean_p2_bg == pytest.approx(result.mean_p2, abs=0.02)
