"""
Bayes posterior over the support, posterior-mean statistics through the Gram
identity, and Monte-Carlo MMSE with common random numbers across SNRs.
"""

from concurrent.futures import Executor
from math import log, sqrt
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.special import logsumexp, softmax

from ..models.channel import ChannelInstance, ProjectionObservation
from ..models.estimates import (
    BayesMapComparison,
    BetaGridSimulation,
    MonteCarloEstimate,
    PosteriorSummary,
)
from ..utils.error_handlers import DimensionMismatch, DomainError
from ..utils.parallel import run_trials
from ..utils.rng import TrialStreams
from ..utils.stats import mean_and_se
from .channel_service import lambda_for_beta

logger = logging.getLogger(__name__)

MIN_MMSE_TRIALS = 100

# column order of the per-trial kernel output
SQ_ERROR, LOG_Z, PLANTED, MAP_SQ_ERROR, MAP_HIT = range(5)


def posterior_weights(obs: ProjectionObservation) -> np.ndarray:
    """w_i proportional to exp(sqrt(lambda) u_i); uniform at lambda = 0."""
    u = np.asarray(obs.u, dtype=np.float64)
    if obs.lam == 0:
        return np.full(u.size, 1.0 / u.size)
    return softmax(sqrt(obs.lam) * u)


def posterior_statistics(weights: np.ndarray, gram: np.ndarray, true_index: int) -> PosteriorSummary:
    """
    <X, X_hat>, ||X_hat||^2 and ||X - X_hat||^2 = 1 - 2 w.g_J + w^T G w.

    Raises:
        DimensionMismatch: when weights and G disagree in size
    """
    weights = np.asarray(weights, dtype=np.float64)
    gram = np.asarray(gram, dtype=np.float64)
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise DimensionMismatch(weights.size, gram.shape[0], "Gram matrix must be square")
    if gram.shape[0] != weights.size:
        raise DimensionMismatch(gram.shape[0], weights.size, "posterior weights")
    if not 0 <= true_index < weights.size:
        raise DomainError(f"true_index {true_index} outside the support")

    overlap = float(weights @ gram[:, true_index])
    norm_sq = max(0.0, float(weights @ (gram @ weights)))
    sq_error = max(0.0, 1.0 - 2.0 * overlap + norm_sq)
    return PosteriorSummary(
        weights=weights,
        overlap_true=overlap,
        norm_sq_est=norm_sq,
        sq_error=sq_error,
    )


def map_estimate(obs: ProjectionObservation) -> int:
    """argmax_i u_i, smallest index on ties."""
    return int(np.argmax(obs.u))


def _grid_kernel(instance: ChannelInstance, lambdas: np.ndarray):
    backend = instance.backend
    size = instance.size
    log_size = log(size)
    roots = np.sqrt(lambdas)
    uniform = np.full(size, 1.0 / size)

    def kernel(rng: np.random.Generator) -> np.ndarray:
        j = int(rng.integers(size))
        noise = backend.noise(rng)
        g_j = backend.signal_row(j)
        out = np.empty((lambdas.size, 5))
        for a, (lam, root) in enumerate(zip(lambdas, roots)):
            u = root * g_j + noise
            if lam == 0:
                weights = uniform
                out[a, LOG_Z] = 0.0
            else:
                scores = root * u
                weights = softmax(scores)
                out[a, LOG_Z] = logsumexp(scores - lam / 2.0) - log_size
            norm_sq = max(0.0, backend.quadratic_form(weights))
            out[a, SQ_ERROR] = max(0.0, 1.0 - 2.0 * float(weights @ g_j) + norm_sq)
            out[a, PLANTED] = root * u[j] - lam / 2.0
            j_hat = int(np.argmax(u))
            out[a, MAP_SQ_ERROR] = max(0.0, 2.0 - 2.0 * g_j[j_hat])
            out[a, MAP_HIT] = float(j_hat == j)
        return out

    return kernel


def simulate_beta_grid(
    instance: ChannelInstance,
    lambdas: Sequence[float],
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
) -> BetaGridSimulation:
    """
    Runs n_trials observations and evaluates every SNR in lambdas on each of them.

    Trial i draws (J, noise) from streams.generator(i) once, so the estimates
    at different SNRs share their randomness exactly.
    """
    grid = np.asarray(list(lambdas), dtype=np.float64)
    if grid.size == 0 or np.any(grid < 0):
        raise DomainError("lambda grid must be nonempty and nonnegative")

    out = run_trials(_grid_kernel(instance, grid), n_trials, streams, executor)
    return BetaGridSimulation(
        lambdas=grid,
        sq_error=out[:, :, SQ_ERROR],
        log_z=out[:, :, LOG_Z],
        planted_score=out[:, :, PLANTED],
        map_sq_error=out[:, :, MAP_SQ_ERROR],
        map_hit=out[:, :, MAP_HIT],
    )


def mmse_monte_carlo(
    instance: ChannelInstance,
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
) -> MonteCarloEstimate:
    """Mean and standard error of ||X - E[X|Y]||^2 at the instance SNR."""
    if n_trials < MIN_MMSE_TRIALS:
        raise DomainError(f"MMSE estimation needs at least {MIN_MMSE_TRIALS} trials")
    sim = simulate_beta_grid(instance, [instance.lam], n_trials, streams, executor)
    mean, se = mean_and_se(sim.sq_error[:, 0])
    return MonteCarloEstimate(value=float(mean), standard_error=float(se), n_trials=n_trials)


def map_mse_monte_carlo(
    instance: ChannelInstance,
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
) -> BayesMapComparison:
    """Posterior mean vs MAP point estimate on the same trials."""
    sim = simulate_beta_grid(instance, [instance.lam], n_trials, streams, executor)
    bayes, bayes_se = mean_and_se(sim.sq_error[:, 0])
    map_mse, map_se = mean_and_se(sim.map_sq_error[:, 0])
    diff, diff_se = mean_and_se(sim.map_sq_error[:, 0] - sim.sq_error[:, 0])
    accuracy, _ = mean_and_se(sim.map_hit[:, 0])
    return BayesMapComparison(
        lam=instance.lam,
        n_trials=n_trials,
        bayes_mse=float(bayes),
        bayes_se=float(bayes_se),
        map_mse=float(map_mse),
        map_se=float(map_se),
        difference=float(diff),
        difference_se=float(diff_se),
        map_accuracy=float(accuracy),
    )


def mmse_curve(
    instance: ChannelInstance,
    beta_grid: Sequence[float],
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
) -> List[Tuple[float, MonteCarloEstimate]]:
    """MMSE along a beta grid with common random numbers."""
    lambdas = [lambda_for_beta(instance.prior, b) for b in beta_grid]
    sim = simulate_beta_grid(instance, lambdas, n_trials, streams, executor)
    means, ses = mean_and_se(sim.sq_error)
    return [
        (float(b), MonteCarloEstimate(value=float(m), standard_error=float(s), n_trials=n_trials))
        for b, m, s in zip(beta_grid, np.atleast_1d(means), np.atleast_1d(ses))
    ]
