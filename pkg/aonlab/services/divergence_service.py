"""
Divergence functionals of the Gaussian additive channel: KL under Q_lambda,
mutual information, chi-square, binary divergence and the I-MMSE table.

All values are in nats.
"""

from concurrent.futures import Executor
from math import expm1, fsum, inf, log, log1p
from typing import List, Optional, Sequence
import logging

import numpy as np
from scipy.special import logsumexp, rel_entr

from ..models.channel import ChannelInstance
from ..models.estimates import (
    ChiSquareValue,
    DivergenceEstimate,
    DivergenceKind,
    ImmseRow,
    KlCurvePoint,
    MutualInformationCheck,
)
from ..models.prior import DiscretePrior
from ..utils.error_handlers import DomainError
from ..utils.parallel import run_trials
from ..utils.rng import TrialStreams
from ..utils.stats import mean_and_se
from .channel_service import DEFAULT_AMBIENT_CAP, DEFAULT_GRAM_CAP, build_instance, lambda_for_beta
from .estimator_service import simulate_beta_grid
from .prior_service import DEFAULT_ENUMERATION_CAP, sample_signal
from .tensor_service import lifted_overlap_pmf, tensor_overlap

logger = logging.getLogger(__name__)

MIN_DIVERGENCE_TRIALS = 1000
# exp() overflows a double beyond ~709
OVERFLOW_EXPONENT = 700.0
GRID_SPACING_TOLERANCE = 1e-9


def _require_trials(n_trials: int, what: str) -> None:
    if n_trials < MIN_DIVERGENCE_TRIALS:
        raise DomainError(f"{what} needs at least {MIN_DIVERGENCE_TRIALS} trials, got {n_trials}")


def kl_monte_carlo(
    instance: ChannelInstance,
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
) -> DivergenceEstimate:
    """
    D(Q_lambda || Q_0) as the mean of log Z(Y) over Y ~ Q_lambda.

    Raises:
        DomainError: for fewer than MIN_DIVERGENCE_TRIALS trials
    """
    _require_trials(n_trials, "KL estimation")
    sim = simulate_beta_grid(instance, [instance.lam], n_trials, streams, executor)
    mean, se = mean_and_se(sim.log_z[:, 0])
    return DivergenceEstimate(
        value=float(mean),
        standard_error=float(se),
        n_trials=n_trials,
        lam=instance.lam,
        kind=DivergenceKind.KL,
    )


def mutual_information_check(
    instance: ChannelInstance,
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
) -> MutualInformationCheck:
    """
    I(X; Y) estimated directly as the mean of sqrt(lambda) u_J - lambda/2 - log Z,
    checked against I = lambda/2 - KL on the same trials.

    The per-trial residual (I_direct + KL - lambda/2) is sqrt(lambda) u_J - lambda,
    so its standard error is computed from those values directly.

    Raises:
        DomainError: for fewer than MIN_DIVERGENCE_TRIALS trials
    """
    _require_trials(n_trials, "mutual information check")
    lam = instance.lam
    sim = simulate_beta_grid(instance, [lam], n_trials, streams, executor)
    planted = sim.planted_score[:, 0]
    log_z = sim.log_z[:, 0]

    i_direct, i_se = mean_and_se(planted - log_z)
    kl, kl_se = mean_and_se(log_z)
    residual, residual_se = mean_and_se(planted - lam / 2.0)

    check = MutualInformationCheck(
        lam=lam,
        n_trials=n_trials,
        i_direct=float(i_direct),
        i_se=float(i_se),
        kl=float(kl),
        kl_se=float(kl_se),
        residual=float(residual),
        residual_se=float(residual_se),
    )
    logger.debug(f"Mutual information at lambda={lam:g}: I={check.i_direct:.6g}, residual={check.residual:.3g}")
    return check


def kl_lower_bound(lam: float, log_m: float) -> float:
    """lambda/2 - log M; negative below the critical SNR."""
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    return lam / 2.0 - log_m


def binary_divergence(a1: float, a2: float) -> float:
    """
    d(a1 || a2) = a1 log(a1/a2) + (1 - a1) log((1 - a1)/(1 - a2)), with 0 log 0 = 0.

    Raises:
        DomainError: arguments outside [0, 1], or a2 in {0, 1} with a1 != a2
    """
    if not (0.0 <= a1 <= 1.0 and 0.0 <= a2 <= 1.0):
        raise DomainError(f"binary divergence needs arguments in [0, 1], got ({a1}, {a2})")
    if a2 in (0.0, 1.0):
        if a1 != a2:
            raise DomainError(f"d({a1} || {a2}) is infinite")
        return 0.0
    return float(rel_entr(a1, a2) + rel_entr(1.0 - a1, 1.0 - a2))


def chi_square_exact(prior: DiscretePrior, lam: float) -> ChiSquareValue:
    """
    chi^2(Q_lambda || Q_0) = sum_rho q(rho) e^{lambda rho} - 1 over the lifted overlap law.

    The linear value is summed as q(rho) expm1(lambda rho), which keeps precision at
    small lambda. When lambda * max rho exceeds 700 only the log moment is finite.
    """
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    pmf = lifted_overlap_pmf(prior)
    rho = pmf.value_array()
    overflow = lam * float(rho[-1]) > OVERFLOW_EXPONENT

    if overflow:
        log_moment = max(0.0, float(logsumexp(pmf.log_probability_array() + lam * rho)))
        value = inf
    else:
        value = max(0.0, fsum(q * expm1(lam * r) for r, q in pmf.atoms()))
        log_moment = log1p(value)

    log_value = -inf if log_moment == 0.0 else log_moment + log(-expm1(-log_moment))
    if overflow:
        logger.info(f"chi-square of {prior.label} at lambda={lam:g} overflows; log moment {log_moment:.6g}")
    return ChiSquareValue(lam=lam, value=value, log_moment=log_moment, log_value=log_value, overflow=overflow)


def chi_square_monte_carlo(
    prior: DiscretePrior,
    lam: float,
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
) -> DivergenceEstimate:
    """Pair-sampling estimate of E exp(lambda <X, X'>) - 1."""
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")

    def kernel(rng: np.random.Generator) -> float:
        a = sample_signal(prior, rng)
        b = sample_signal(prior, rng)
        return expm1(lam * tensor_overlap(a, b, prior.d))

    mean, se = mean_and_se(run_trials(kernel, n_trials, streams, executor))
    return DivergenceEstimate(
        value=float(mean),
        standard_error=float(se),
        n_trials=n_trials,
        lam=lam,
        kind=DivergenceKind.CHI2_MONTE_CARLO,
    )


def prop1_target(beta: float) -> float:
    """Limit of the normalized KL: (beta - 1)_+ / 2."""
    return 0.5 * max(beta - 1.0, 0.0)


def _critical_lambda(instance: ChannelInstance) -> float:
    lam_n = 2.0 * instance.log_m
    if lam_n <= 0:
        raise DomainError("normalized divergences need a prior with at least two signals")
    return lam_n


def kl_curve(
    instance: ChannelInstance,
    beta_grid: Sequence[float],
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
) -> List[KlCurvePoint]:
    """KL and KL / lambda_N along a beta grid with common random numbers."""
    lam_n = _critical_lambda(instance)
    lambdas = [lambda_for_beta(instance.prior, b) for b in beta_grid]
    sim = simulate_beta_grid(instance, lambdas, n_trials, streams, executor)
    means, ses = mean_and_se(sim.log_z)

    return [
        KlCurvePoint(
            beta=float(beta),
            lam=float(lam),
            kl=float(kl),
            kl_se=float(se),
            kl_normalized=float(kl) / lam_n,
            kl_normalized_se=float(se) / lam_n,
            lower_bound=kl_lower_bound(lam, instance.log_m),
            prop1_target=prop1_target(beta),
        )
        for beta, lam, kl, se in zip(beta_grid, lambdas, np.atleast_1d(means), np.atleast_1d(ses))
    ]


def _grid_spacing(beta_grid: Sequence[float]) -> float:
    if len(beta_grid) < 2:
        return 0.0
    steps = np.diff(np.asarray(beta_grid, dtype=np.float64))
    h = float(steps[0])
    if h <= 0 or np.any(np.abs(steps - h) > GRID_SPACING_TOLERANCE * max(1.0, h)):
        raise DomainError("I-MMSE check needs a uniform ascending beta grid")
    return h


def immse_curve_check(
    prior: DiscretePrior,
    beta_grid: Sequence[float],
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
    gram_cap: int = DEFAULT_GRAM_CAP,
    ambient_cap: int = DEFAULT_AMBIENT_CAP,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> List[ImmseRow]:
    """
    Compares d/dbeta KL(beta lambda_N)/lambda_N with 1/2 - MMSE(beta lambda_N)/2.

    The derivative is a central difference of the normalized-KL column on the
    shared trials, so it exists only at interior grid points.

    Raises:
        DomainError: for a non-uniform grid or a prior with a single signal
    """
    h = _grid_spacing(beta_grid)
    instance = build_instance(
        prior, 0.0, gram_cap=gram_cap, ambient_cap=ambient_cap, enumeration_cap=enumeration_cap
    )
    lam_n = _critical_lambda(instance)
    lambdas = [lambda_for_beta(prior, b) for b in beta_grid]
    sim = simulate_beta_grid(instance, lambdas, n_trials, streams, executor)

    kl, kl_se = (np.atleast_1d(x) / lam_n for x in mean_and_se(sim.log_z))
    mmse, mmse_se = (np.atleast_1d(x) for x in mean_and_se(sim.sq_error))

    rows = []
    last = len(beta_grid) - 1
    for a, (beta, lam) in enumerate(zip(beta_grid, lambdas)):
        target = 0.5 - 0.5 * float(mmse[a])
        derivative = residual = None
        if 0 < a < last:
            derivative = float(kl[a + 1] - kl[a - 1]) / (2.0 * h)
            residual = derivative - target
        rows.append(ImmseRow(
            beta=float(beta),
            lam=float(lam),
            kl_normalized=float(kl[a]),
            kl_normalized_se=float(kl_se[a]),
            mmse=float(mmse[a]),
            mmse_se=float(mmse_se[a]),
            derivative=derivative,
            target=target,
            residual=residual,
            prop1_target=prop1_target(beta),
        ))
    return rows


def max_immse_residual(rows: Sequence[ImmseRow]) -> float:
    """Largest |residual| over interior rows (0 when there are none)."""
    residuals = [abs(r.residual) for r in rows if r.residual is not None]
    return max(residuals, default=0.0)
