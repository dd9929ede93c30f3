"""Shared fixtures: seeded simulated beta-regression datasets and their fits."""

import numpy as np
import pandas as pd
import pytest

from betapress.links import LinkFunction, link_inverse
from betapress.model import ModelSpec
from betapress.scoring import FitOptions, fit
from betapress.special import random_stream, sample_beta

TIGHT = FitOptions(tolerance=1e-11, max_iterations=500)


def simulate_spec(
    n: int,
    seed: int,
    beta=(-1.0, 2.0),
    gamma=(np.log(30.0),),
    mean_link: LinkFunction = LinkFunction.LOGIT,
) -> ModelSpec:
    """Draw covariates and a beta response from a known model."""
    rng = random_stream(seed, 0)
    k, q = len(beta), len(gamma)
    X = np.column_stack([np.ones(n), rng.uniform(0.0, 1.0, size=(n, k - 1))])
    Z = np.column_stack([np.ones(n), rng.uniform(-0.5, 0.5, size=(n, q - 1))])
    mu = np.asarray(link_inverse(mean_link, X @ np.asarray(beta)))
    phi = np.exp(Z @ np.asarray(gamma))
    y = sample_beta(mu, phi, random_stream(seed, 1))
    return ModelSpec(y=y, X=X, Z=Z, mean_link=mean_link)


@pytest.fixture(scope="session")
def fixed_spec() -> ModelSpec:
    """n = 60, logit mean with one slope, fixed phi = 30."""
    return simulate_spec(60, seed=11)


@pytest.fixture(scope="session")
def varying_spec() -> ModelSpec:
    """n = 80, one slope in each submodel."""
    return simulate_spec(80, seed=12, beta=(-0.5, 1.5), gamma=(np.log(40.0), 2.5))


@pytest.fixture(scope="session")
def fixed_fit(fixed_spec):
    return fit(fixed_spec, TIGHT)


@pytest.fixture(scope="session")
def varying_fit(varying_spec):
    return fit(varying_spec, TIGHT)


@pytest.fixture
def csv_dataset(tmp_path, varying_spec):
    """The varying-dispersion sample written as a CSV with columns y, x1, z1."""
    frame = pd.DataFrame(
        {
            "y": varying_spec.y,
            "x1": varying_spec.X[:, 1],
            "z1": varying_spec.Z[:, 1],
        }
    )
    path = tmp_path / "sample.csv"
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
