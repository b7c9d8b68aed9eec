"""
Fixed-chunk, fixed-order trial scheduler.
"""

import logging
from concurrent.futures import Executor
from typing import Callable, List, Optional

import numpy as np

from .rng import TrialStreams

logger = logging.getLogger(__name__)

CHUNK_SIZE = 64

TrialKernel = Callable[[np.random.Generator], np.ndarray]


def chunk_ranges(n_trials: int, chunk_size: int = CHUNK_SIZE) -> List[range]:
    """Splits [0, n_trials) into consecutive ranges of chunk_size trials."""
    return [range(start, min(start + chunk_size, n_trials)) for start in range(0, n_trials, chunk_size)]


def run_trials(
    kernel: TrialKernel,
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
) -> np.ndarray:
    """
    Runs kernel once per trial and stacks the outputs in trial order.

    Trial i always receives streams.generator(i), so the returned array is
    identical whether the chunks run serially or on any number of workers.

    Args:
        kernel: Function of a generator returning a scalar or 1-D array
        n_trials: Number of trials
        streams: Stream family of the experiment
        executor: Optional pool owned by the caller

    Returns:
        np.ndarray: Array of shape (n_trials,) or (n_trials, width)
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")

    def run_chunk(trials: range) -> np.ndarray:
        return np.stack([
            np.asarray(kernel(streams.generator(i)), dtype=np.float64)
            for i in trials
        ])

    ranges = chunk_ranges(n_trials)
    if executor is None:
        chunks = [run_chunk(r) for r in ranges]
    else:
        # map preserves submission order
        chunks = list(executor.map(run_chunk, ranges))

    logger.debug(f"Ran {n_trials} trials in {len(ranges)} chunks ({streams!r})")
    return np.concatenate(chunks, axis=0)
