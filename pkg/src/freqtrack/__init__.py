"""Frequency tracking beyond the Nyquist limit from short complex records.

A smooth frequency sequence is tracked across many short noisy complex
records by combining an exact amplitude-marginalized likelihood with a
Gauss-Markov smoothness prior.  The maximum a posteriori track is found
by a discrete Viterbi pass followed by continuous Newton refinement, and
the three model variances are estimated unsupervised by maximum
likelihood with an EM-identity gradient.
"""

from freqtrack.signal import DataSet, Hyperparameters, make_test_track, synthesize_dataset
from freqtrack.markov import FrequencyGrid

__all__ = [
    "DataSet",
    "Hyperparameters",
    "FrequencyGrid",
    "make_test_track",
    "synthesize_dataset",
]
