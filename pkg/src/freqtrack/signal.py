"""Signal model: cisoid in circular complex Gaussian noise, per range bin.

Each range bin t carries a short complex record

    y_t = a_t * z(nu_t) + b_t,    z(nu) = [1, e^{2j*pi*nu}, ..., e^{2j*pi*nu*(N-1)}]

with white circular complex Gaussian amplitude a_t (variance r_a) and
noise b_t (variance r_b per sample).  Variance r means Re and Im are each
Gaussian with variance r/2, so E|b|^2 = r_b.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Hyperparameters:
    """The three model variances: amplitude, noise, frequency increment."""

    r_a: float
    r_b: float
    r_nu: float

    def __post_init__(self):
        for name in ("r_a", "r_b", "r_nu"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be strictly positive and finite, got {value!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.r_a, self.r_b, self.r_nu], dtype=float)

    @classmethod
    def from_array(cls, values) -> "Hyperparameters":
        r_a, r_b, r_nu = np.asarray(values, dtype=float)
        return cls(float(r_a), float(r_b), float(r_nu))


@dataclass
class DataSet:
    """T range bins of N complex samples each, optionally with ground truth."""

    samples: np.ndarray
    true_track: np.ndarray | None = None
    true_hyper: Hyperparameters | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 2:
            raise ValueError("samples must be a (T, N) array")
        if samples.shape[0] < 1 or samples.shape[1] < 2:
            raise ValueError("need T >= 1 bins of N >= 2 samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        self.samples = samples
        if self.true_track is not None:
            self.true_track = np.asarray(self.true_track, dtype=float)

    @property
    def n_bins(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


def steering_vector(nu: float, n_samples: int) -> np.ndarray:
    """Unit-modulus cisoid template; 1-periodic in nu."""
    return np.exp(2j * np.pi * nu * np.arange(n_samples))


TRACK_PROFILES = ("linear_ramp", "sine", "piecewise")


def make_test_track(profile: str, n_bins: int, span: tuple[float, float]) -> np.ndarray:
    """Build a smooth length-T frequency sequence spanning [lo, hi].

    linear_ramp is affine from lo to hi; sine is a full period centered
    on the midpoint; piecewise holds lo, ramps up, then holds hi.
    """
    lo, hi = float(span[0]), float(span[1])
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if lo > hi:
        raise ValueError(f"invalid span: lo={lo} > hi={hi}")
    if n_bins == 1:
        return np.array([(lo + hi) / 2.0])
    t = np.arange(n_bins, dtype=float)
    if profile == "linear_ramp":
        return np.linspace(lo, hi, n_bins)
    if profile == "sine":
        mid = (lo + hi) / 2.0
        amp = (hi - lo) / 2.0
        return mid + amp * np.sin(2 * np.pi * t / n_bins)
    if profile == "piecewise":
        third = n_bins // 3
        track = np.empty(n_bins)
        track[:third] = lo
        track[n_bins - third:] = hi
        ramp_len = n_bins - 2 * third
        track[third:n_bins - third] = np.linspace(lo, hi, ramp_len)
        return track
    raise ValueError(f"unknown profile {profile!r}; expected one of {TRACK_PROFILES}")


def _circular_gaussian(rng: np.random.Generator, variance: float, shape) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def synthesize_dataset(
    track,
    hyper: Hyperparameters,
    n_samples: int,
    seed: int,
    fixed_amplitude: complex | None = None,
) -> DataSet:
    """Simulate the per-bin cisoid-plus-noise records, deterministically.

    With fixed_amplitude set, every a_t equals that constant instead of
    being drawn (useful for noiseless oracle checks).
    """
    track = np.asarray(track, dtype=float)
    if track.ndim != 1 or track.size < 1:
        raise ValueError("track must be a nonempty 1-D sequence")
    if n_samples < 2:
        raise ValueError("need n_samples >= 2")
    rng = np.random.default_rng(seed)
    n_bins = track.size
    if fixed_amplitude is None:
        amps = _circular_gaussian(rng, hyper.r_a, n_bins)
    else:
        amps = np.full(n_bins, complex(fixed_amplitude))
    noise = _circular_gaussian(rng, hyper.r_b, (n_bins, n_samples))
    phase = np.exp(2j * np.pi * np.outer(track, np.arange(n_samples)))
    samples = amps[:, None] * phase + noise
    return DataSet(samples=samples, true_track=track.copy(), true_hyper=hyper)
