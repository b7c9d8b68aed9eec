"""
Counter-based random streams.

A trial's generator is a pure function of (master seed, experiment, trial index):
Philox keyed through a SeedSequence whose spawn key carries the experiment id and
the trial index. The stream is independent of β, of the worker count and of how
trials are chunked, which gives exact common random numbers across a β grid.
"""

import zlib

import numpy as np


def experiment_id(name: str) -> int:
    """Stable 32-bit id of an experiment name."""
    return zlib.crc32(name.encode("utf-8")) & 0xFFFFFFFF


class TrialStreams:
    """Family of per-trial generators for one experiment."""

    def __init__(self, master_seed: int, experiment: str):
        if master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        self.master_seed = int(master_seed)
        self.experiment = experiment
        self.experiment_id = experiment_id(experiment)

    def generator(self, trial_index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.experiment_id, int(trial_index))
        )
        return np.random.Generator(np.random.Philox(seq))

    def derive(self, suffix: str) -> "TrialStreams":
        """Streams for a sub-experiment, disjoint from this one."""
        return TrialStreams(self.master_seed, f"{self.experiment}/{suffix}")

    def __repr__(self) -> str:
        return f"TrialStreams(seed={self.master_seed}, experiment={self.experiment!r})"
