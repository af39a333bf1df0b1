"""Amplitude-marginalized likelihood, smoothness prior, and MAP criterion.

Marginalizing the Gaussian amplitude out of the per-bin likelihood leaves

    log f(y | nu) = log beta - gamma + alpha * P(nu)

with alpha = N r_a / (r_b (N r_a + r_b)), gamma = |y|^2 / r_b and P the
periodogram.  Summed over bins and combined with a Gauss-Markov prior on
frequency increments, the negative log posterior is a regularized least
squares criterion with weight lam = 1 / (2 alpha r_nu), plus a band
constraint on the first frequency that pins down the global integer shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from freqtrack.signal import DataSet, Hyperparameters
from freqtrack.spectral import periodogram


def _samples(data) -> np.ndarray:
    if isinstance(data, DataSet):
        return data.samples
    return np.asarray(data, dtype=complex)


def alpha_coefficient(hyper: Hyperparameters, n_samples: int) -> float:
    n = n_samples
    return n * hyper.r_a / (hyper.r_b * (n * hyper.r_a + hyper.r_b))


def log_beta_coefficient(hyper: Hyperparameters, n_samples: int) -> float:
    n = n_samples
    return -n * np.log(np.pi) + (1 - n) * np.log(hyper.r_b) - np.log(n * hyper.r_a + hyper.r_b)


def smoothing_weight(hyper: Hyperparameters, n_samples: int) -> float:
    """Regularization weight lam = 1 / (2 alpha r_nu)."""
    return 1.0 / (2.0 * alpha_coefficient(hyper, n_samples) * hyper.r_nu)


def log_marginal_likelihood(samples, nu: float, hyper: Hyperparameters) -> float:
    """Log density of the record under the amplitude-marginalized model.

    Equals the complex Gaussian log density with covariance
    r_a z(nu) z(nu)^H + r_b I.
    """
    y = np.asarray(samples, dtype=complex).ravel()
    gamma = float(np.vdot(y, y).real) / hyper.r_b
    alpha = alpha_coefficient(hyper, y.size)
    return log_beta_coefficient(hyper, y.size) - gamma + alpha * periodogram(y, nu)


def in_initial_band(nu1: float, band_width: int = 1) -> bool:
    """First-frequency constraint set (-K/2, +K/2], left-open right-closed."""
    half = band_width / 2.0
    return -half < nu1 <= half


def data_misfit(data, track) -> float:
    """Negative sum of per-bin periodograms along the track (SIP)."""
    samples = _samples(data)
    track = np.asarray(track, dtype=float)
    if track.size != samples.shape[0]:
        raise ValueError(f"track length {track.size} != number of bins {samples.shape[0]}")
    return -sum(periodogram(samples[t], track[t]) for t in range(track.size))


def smoothness_penalty(track, r_nu: float, band_width: int = 1) -> float:
    """Quadratic first-difference penalty plus the first-frequency band term.

    Returns +inf when nu_1 leaves the band.  The constant 2 r_nu log K is
    included for completeness (zero for K=1).
    """
    if r_nu <= 0:
        raise ValueError("r_nu must be positive")
    track = np.asarray(track, dtype=float)
    if not in_initial_band(track[0], band_width):
        return np.inf
    const = 2.0 * r_nu * np.log(band_width)
    return const + float(np.sum(np.diff(track) ** 2))


@dataclass(frozen=True)
class MapObjective:
    """Value of the regularized tracking criterion and its weight lam."""

    value: float
    weight: float


def map_objective(data, track, hyper: Hyperparameters, band_width: int = 1) -> MapObjective:
    """-sum_t P_t(nu_t) + lam sum_t (nu_{t+1}-nu_t)^2 (+inf outside band)."""
    samples = _samples(data)
    track = np.asarray(track, dtype=float)
    lam = smoothing_weight(hyper, samples.shape[1])
    if not in_initial_band(track[0], band_width):
        return MapObjective(value=np.inf, weight=lam)
    value = data_misfit(samples, track) + lam * float(np.sum(np.diff(track) ** 2))
    return MapObjective(value=value, weight=lam)
