"""Per-bin reference estimators: aliased periodogram argmax and its unwrap."""

from __future__ import annotations

import numpy as np

from freqtrack.refine import canonicalize, decimal_part
from freqtrack.signal import DataSet
from freqtrack.spectral import periodogram_deriv_many, periodogram_table


def wrap_to_band(x):
    """Wrap to (-0.5, +0.5]."""
    out = np.asarray(-decimal_part(-np.asarray(x, dtype=float)))
    return out if out.ndim else float(out)


def ml_periodogram_argmax(dataset: DataSet, grid_resolution: int = 1024) -> np.ndarray:
    """Per-bin periodogram maximizer over (-0.5, 0.5], independently per bin.

    A fine-grid argmax is followed by one Newton polish step when the local
    curvature allows it.
    """
    nus = -0.5 + np.arange(1, grid_resolution + 1) / grid_resolution
    p_table = periodogram_table(dataset.samples, nus)
    peaks = nus[np.argmax(p_table, axis=1)]
    first, second = periodogram_deriv_many(dataset.samples, peaks)
    spacing = 1.0 / grid_resolution
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(second < 0, -first / second, 0.0)
    step = np.where(np.abs(step) <= spacing, step, 0.0)
    return wrap_to_band(peaks + step)


def unwrap_track(track) -> np.ndarray:
    """Classical unwrap: shift each frequency by an integer so successive
    differences stay within half a cycle (the canonicalization recursion)."""
    return canonicalize(track)
