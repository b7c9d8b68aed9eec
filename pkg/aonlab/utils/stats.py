"""
Monte-Carlo summary statistics.

Sums run along a contiguous trial axis so numpy uses pairwise summation; inputs
arrive in trial order, which makes every reduction bitwise reproducible.
"""

from typing import Tuple

import numpy as np


def _trial_major(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    # trials on the last axis, contiguous
    return np.ascontiguousarray(np.moveaxis(samples, 0, -1))


def mean_and_se(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sample mean and standard error along the first (trial) axis.

    Returns scalars for 1-D input, arrays of the trailing shape otherwise.
    The standard error of a single trial is 0.
    """
    data = _trial_major(samples)
    n = data.shape[-1]
    mean = np.sum(data, axis=-1) / n
    if n < 2:
        return mean, np.zeros_like(mean)
    centered = data - np.expand_dims(np.asarray(mean), -1)
    var = np.sum(centered * centered, axis=-1) / (n - 1)
    return mean, np.sqrt(var / n)


def median_of_means(samples: np.ndarray, n_groups: int = 10) -> float:
    """Median of the means of n_groups consecutive blocks (heavy-tailed inputs)."""
    data = np.asarray(samples, dtype=np.float64)
    if data.ndim != 1:
        raise ValueError("median_of_means expects a 1-D sample")
    n_groups = max(1, min(n_groups, data.size))
    blocks = np.array_split(data, n_groups)
    return float(np.median([np.sum(b) / b.size for b in blocks]))
