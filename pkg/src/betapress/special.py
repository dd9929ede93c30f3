"""
Special functions and beta variates.

log-gamma, digamma and trigamma evaluated elementwise on numpy arrays, plus
seeded beta sampling in the (mu, phi) parametrization. Every other module
depends on these.

digamma/trigamma shift the argument upward with the recurrences
    psi(x) = psi(x + 1) - 1/x,   psi'(x) = psi'(x + 1) + 1/x**2
until x >= 6 and then use the asymptotic (Stirling/de Moivre) expansions
in 1/x**2.
"""

from typing import Union

import numpy as np
from scipy import special as sp_special

from .errors import DomainError

ArrayLike = Union[float, np.ndarray]

# Shift threshold for the asymptotic expansions
_ASYMPTOTIC_FROM = 6.0

# B_2k / (2k) for k = 1..7 (digamma tail)
_DIGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

# B_2k for k = 1..7 (trigamma tail)
_TRIGAMMA_COEFFS = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)


def _as_positive(x: ArrayLike, name: str) -> np.ndarray:
    """Coerce to a float array and check x > 0 and finite."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} requires finite arguments")
    if np.any(arr <= 0.0):
        bad = arr[arr <= 0.0].flat[0]
        raise DomainError(f"{name} requires x > 0, got: {bad!r}")
    return arr


def _unwrap(value: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(value) if np.ndim(like) == 0 else value


def log_gamma(x: ArrayLike) -> ArrayLike:
    """
    Natural log of the gamma function for x > 0.

    Raises:
        DomainError: If any x is non-finite or non-positive

    Examples:
        >>> round(log_gamma(5.0), 10)   # ln 24
        3.1780538303
        >>> round(log_gamma(0.5), 10)   # ln sqrt(pi)
        0.5723649429
    """
    arr = _as_positive(x, "log_gamma")
    return _unwrap(sp_special.gammaln(arr), x)


def _shift_up(arr: np.ndarray, term) -> tuple[np.ndarray, np.ndarray]:
    """Apply the recurrence until every entry reaches the asymptotic region."""
    shifted = np.atleast_1d(arr).astype(float, copy=True)
    acc = np.zeros_like(shifted)
    low = shifted < _ASYMPTOTIC_FROM
    while np.any(low):
        acc[low] += term(shifted[low])
        shifted[low] += 1.0
        low = shifted < _ASYMPTOTIC_FROM
    return shifted, acc


def digamma(x: ArrayLike) -> ArrayLike:
    """
    Digamma function psi(x) = d log Gamma(x) / dx for x > 0.

    Raises:
        DomainError: If any x is non-finite or non-positive

    Examples:
        >>> round(digamma(1.0), 10)   # -Euler-Mascheroni
        -0.5772156649
        >>> round(digamma(0.5), 10)
        -1.963510026
    """
    arr = _as_positive(x, "digamma")
    shifted, acc = _shift_up(arr, lambda v: -1.0 / v)

    inv2 = 1.0 / (shifted * shifted)
    series = np.zeros_like(shifted)
    for coeff in reversed(_DIGAMMA_COEFFS):
        series = (series + coeff) * inv2
    value = np.log(shifted) - 0.5 / shifted - series + acc
    return _unwrap(value.reshape(arr.shape), x)


def trigamma(x: ArrayLike) -> ArrayLike:
    """
    Trigamma function psi'(x) for x > 0. Always positive.

    Raises:
        DomainError: If any x is non-finite or non-positive

    Examples:
        >>> round(trigamma(1.0), 10)   # pi**2 / 6
        1.6449340668
        >>> round(trigamma(0.5), 10)   # pi**2 / 2
        4.9348022005
    """
    arr = _as_positive(x, "trigamma")
    shifted, acc = _shift_up(arr, lambda v: 1.0 / (v * v))

    inv = 1.0 / shifted
    inv2 = inv * inv
    series = np.zeros_like(shifted)
    for coeff in reversed(_TRIGAMMA_COEFFS):
        series = (series + coeff) * inv2
    value = inv + 0.5 * inv2 + series * inv + acc
    return _unwrap(value.reshape(arr.shape), x)


def random_stream(seed: int, *key: int) -> np.random.Generator:
    """
    Independent, reproducible generator for a (seed, key...) pair.

    Substreams are addressed by spawn keys, so replication r of a run owns
    random_stream(seed, 1, r) regardless of how many workers execute the run.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def sample_beta(
    mu: ArrayLike,
    phi: ArrayLike,
    rng: np.random.Generator,
    size=None,
) -> ArrayLike:
    """
    Draw from Beta(mu*phi, (1 - mu)*phi) as a ratio of two gamma variates.

    numpy's gamma sampler handles shapes below one, which occur for
    mu*phi < 1. Draws that round to 0 or 1 in double precision are nudged
    to the nearest representable interior value.

    Args:
        mu: Mean(s), strictly in (0, 1)
        phi: Precision(s), > 0
        rng: Seeded numpy Generator (single owner)
        size: Output shape; defaults to the broadcast shape of mu and phi

    Raises:
        DomainError: If mu is outside (0, 1) or phi <= 0
    """
    mu_arr = np.asarray(mu, dtype=float)
    phi_arr = _as_positive(phi, "sample_beta (phi)")
    if not np.all(np.isfinite(mu_arr)) or np.any((mu_arr <= 0.0) | (mu_arr >= 1.0)):
        raise DomainError("sample_beta requires 0 < mu < 1")

    if size is None:
        size = np.broadcast(mu_arr, phi_arr).shape
    a = rng.standard_gamma(mu_arr * phi_arr, size=size)
    b = rng.standard_gamma((1.0 - mu_arr) * phi_arr, size=size)
    draws = a / (a + b)
    draws = np.clip(draws, np.finfo(float).tiny, np.nextafter(1.0, 0.0))
    if np.ndim(draws) == 0:
        return float(draws)
    return draws
