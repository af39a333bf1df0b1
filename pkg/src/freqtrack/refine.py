"""Continuous refinement of a discrete track and half-step canonicalization.

The tracking criterion is smooth away from the band constraint, with a
cheap gradient (periodogram derivatives) and a tridiagonal Hessian, so
Newton steps solve in linear time.  A rewrapping recursion built on the
decimal-part function turns any track into one whose successive steps
stay within half a cycle without increasing the criterion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from freqtrack.likelihood import in_initial_band, map_objective, smoothing_weight
from freqtrack.signal import DataSet, Hyperparameters
from freqtrack.spectral import periodogram_deriv_many


def decimal_part(x):
    """Wrap to [-0.5, +0.5); 1-periodic, with decimal_part(0.5) == -0.5."""
    x = np.asarray(x, dtype=float)
    out = x - np.floor(x + 0.5)
    return out if out.ndim else float(out)


def canonicalize(track) -> np.ndarray:
    """Rewrap a track so every successive step is at most half a cycle.

    Each output frequency differs from the input by an integer, so all
    per-bin periodograms are preserved; the smoothness penalty can only
    shrink, strictly so whenever the input violates the half-step bound.
    """
    track = np.asarray(track, dtype=float)
    out = np.empty_like(track)
    out[0] = track[0]
    for t in range(track.size - 1):
        out[t + 1] = out[t] + decimal_part(track[t + 1] - out[t])
    return out


def steps_within_half(track) -> bool:
    """True iff all successive absolute frequency differences are <= 1/2."""
    track = np.asarray(track, dtype=float)
    return bool(np.all(np.abs(np.diff(track)) <= 0.5))


def objective_gradient(dataset: DataSet, track, hyper: Hyperparameters,
                       band_width: int = 1) -> np.ndarray:
    """Gradient of the tracking criterion: -P'_t plus the difference-penalty term."""
    track = np.asarray(track, dtype=float)
    if not in_initial_band(track[0], band_width):
        raise ValueError("first frequency outside the initial band: criterion is infinite")
    lam = smoothing_weight(hyper, dataset.n_samples)
    first, _ = periodogram_deriv_many(dataset.samples, track)
    diffs = np.diff(track)
    pen = np.zeros_like(track)
    pen[1:] += 2.0 * diffs
    pen[:-1] -= 2.0 * diffs
    return -first + lam * pen


def _hessian_bands(dataset: DataSet, track, hyper: Hyperparameters) -> np.ndarray:
    """Upper banded (2, T) storage of diag(-P'') + 2 lam * second-difference matrix."""
    track = np.asarray(track, dtype=float)
    lam = smoothing_weight(hyper, dataset.n_samples)
    _, second = periodogram_deriv_many(dataset.samples, track)
    n = track.size
    diag = -second + 2.0 * lam * np.full(n, 2.0)
    if n >= 1:
        diag[0] -= 2.0 * lam
        diag[-1] -= 2.0 * lam
    bands = np.zeros((2, n))
    bands[1] = diag
    bands[0, 1:] = -2.0 * lam
    return bands


@dataclass
class RefinementResult:
    track: np.ndarray
    objective_trace: list
    iterations: int
    converged: bool


def refine_map(
    dataset: DataSet,
    init_track,
    hyper: Hyperparameters,
    band_width: int = 1,
    method: str = "newton",
    max_iter: int = 100,
    grad_tol: float = 1e-8,
) -> RefinementResult:
    """Locally minimize the tracking criterion from a feasible starting track.

    Newton solves the tridiagonal system directly, with step halving and a
    gradient fallback whenever the system is indefinite or the step fails
    to decrease the criterion.  Steps that push the first frequency out of
    the band are rejected by the same decrease test (infinite criterion).
    """
    if method not in ("gradient", "newton"):
        raise ValueError(f"unknown method {method!r}")
    track = np.asarray(init_track, dtype=float).copy()
    value = map_objective(dataset, track, hyper, band_width).value
    if not np.isfinite(value):
        raise ValueError("infeasible starting track")
    trace = [value]
    converged = False
    iterations = 0

    def objective(candidate):
        return map_objective(dataset, candidate, hyper, band_width).value

    for iterations in range(1, max_iter + 1):
        grad = objective_gradient(dataset, track, hyper, band_width)
        if np.max(np.abs(grad)) < grad_tol:
            converged = True
            iterations -= 1
            break
        step = None
        if method == "newton":
            bands = _hessian_bands(dataset, track, hyper)
            if track.size == 1:
                step = -grad / bands[1] if bands[1, 0] > 0 else None
            else:
                try:
                    step = scipy.linalg.solveh_banded(bands, -grad)
                except scipy.linalg.LinAlgError:
                    step = None
            if step is not None and float(step @ grad) >= 0.0:
                step = None
        if step is None:
            step = -grad / max(np.max(np.abs(grad)), 1.0)
        scale = 1.0
        new_value = objective(track + scale * step)
        while new_value >= value and scale > 1e-14:
            scale *= 0.5
            new_value = objective(track + scale * step)
        if new_value >= value:
            # no decrease in the step direction: treat as converged
            converged = np.max(np.abs(grad)) < grad_tol
            iterations -= 1
            break
        track = track + scale * step
        value = new_value
        trace.append(value)

    return RefinementResult(track=track, objective_trace=trace,
                            iterations=iterations, converged=converged)
