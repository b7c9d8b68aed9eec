"""
Conditional second moment: the truncation event, the truncated exponential
moment m(rho, lambda) via exponential tilting, and the conditional chi-square
bound over the exact overlap law.

Tilting: for (W, W') ~ N(0, Sigma_rho / lambda) with Sigma_rho = [[1, rho], [rho, 1]],

    E[e^{lambda (W + W' - 1)} 1_S] = e^{lambda rho} P[N((1+rho)(1, 1), Sigma_rho / lambda) in S]

so only a Gaussian rectangle probability is left, evaluated in log space.
"""

from math import erf, exp, inf, isfinite, log, sqrt
from typing import List, Optional, Sequence, Tuple
import logging
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import minimize_scalar
from scipy.special import log_ndtr, logsumexp

from ..models.estimates import MonteCarloEstimate
from ..models.prior import DiscretePrior
from ..models.second_moment import ConditionalChiSquareBound, Prop5Calibration, Prop5Row, TruncationEvent
from ..utils.error_handlers import DomainError, NumericalFailure
from ..utils.stats import mean_and_se
from .prior_service import log_cardinality
from .tensor_service import default_t_grid, lifted_overlap_pmf, rate_function

logger = logging.getLogger(__name__)

# frozen upper bound on lambda^{1/4} * margin of the truncated moment
PROP5_CONSTANT = 1.0

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200
# the standardized integrand decays at least like exp(-(z - z*)^2 / 2)
INTEGRATION_WINDOW = 12.0
SEARCH_SPAN = 60.0
DEGENERATE_CORRELATION = 1e-12

Rect = Tuple[Tuple[float, float], Tuple[float, float]]


def omega_probability(lam: float) -> float:
    """P[|N(0, 1)| <= lambda^{1/4}] = erf(lambda^{1/4} / sqrt 2)."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    return erf(lam ** 0.25 / sqrt(2.0))


def truncation_event(lam: float) -> TruncationEvent:
    """The square [1 - h, 1 + h]^2, h = lambda^{-1/4}, in normalized projections."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    h = lam ** -0.25
    return TruncationEvent(lam=lam, half_width=lam ** 0.25, h=h, lower=1.0 - h, upper=1.0 + h)


def log_normal_interval(lo: float, hi: float) -> float:
    """log(Phi(hi) - Phi(lo)) without cancellation in either tail."""
    if not lo < hi:
        return -inf
    if lo > 0:
        lo, hi = -hi, -lo
    top = float(log_ndtr(hi))
    diff = float(log_ndtr(lo)) - top
    if diff == 0.0:
        return -inf
    return top + log(-np.expm1(diff))


def _log_univariate(mean: float, sd: float, lo: float, hi: float) -> float:
    if sd == 0.0:
        return 0.0 if lo <= mean <= hi else -inf
    return log_normal_interval((lo - mean) / sd, (hi - mean) / sd)


def _validate_covariance(cov: np.ndarray) -> None:
    if cov.shape != (2, 2) or not np.all(np.isfinite(cov)):
        raise DomainError("covariance must be a finite 2x2 matrix")
    if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, float(np.abs(cov).max())):
        raise DomainError("covariance must be symmetric")
    if np.linalg.eigvalsh(cov).min() < -1e-12 * max(1.0, float(np.abs(cov).max())):
        raise DomainError("covariance must be positive semidefinite")


def log_bvn_rectangle(mean: Sequence[float], cov: Sequence[Sequence[float]], rect: Rect) -> float:
    """
    log P[(W1, W2) in [a1, b1] x [a2, b2]] for a bivariate normal.

    The first coordinate is standardized to z and the conditional law of W2 given z
    is integrated in closed form, leaving the log-concave integrand
    log phi(z) + log(Phi(hi(z)) - Phi(lo(z))). Its maximizer is located first and
    quad integrates exp(f - f_max) on a window around it, so probabilities down
    to exp(-10^6) keep their relative accuracy.

    Rank-one covariances collapse to a univariate interval.

    Raises:
        DomainError: invalid covariance
        NumericalFailure: quadrature did not reach its tolerance
    """
    mu = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)
    _validate_covariance(cov)
    (a1, b1), (a2, b2) = rect
    if not (a1 < b1 and a2 < b2):
        return -inf

    s1, s2 = sqrt(max(cov[0, 0], 0.0)), sqrt(max(cov[1, 1], 0.0))
    if s1 == 0.0:
        if not a1 <= mu[0] <= b1:
            return -inf
        return _log_univariate(mu[1], s2, a2, b2)
    if s2 == 0.0:
        if not a2 <= mu[1] <= b2:
            return -inf
        return _log_univariate(mu[0], s1, a1, b1)

    r = float(np.clip(cov[0, 1] / (s1 * s2), -1.0, 1.0))
    alpha, beta = (a1 - mu[0]) / s1, (b1 - mu[0]) / s1

    if 1.0 - abs(r) <= DEGENERATE_CORRELATION:
        # W2 = mu2 + sign(r) s2 z on the support line
        if r > 0:
            lo, hi = (a2 - mu[1]) / s2, (b2 - mu[1]) / s2
        else:
            lo, hi = (mu[1] - b2) / s2, (mu[1] - a2) / s2
        return log_normal_interval(max(alpha, lo), min(beta, hi))

    cond_sd = s2 * sqrt(1.0 - r * r)

    def log_integrand(z: float) -> float:
        center = mu[1] + r * s2 * z
        return -0.5 * z * z - 0.5 * log(2.0 * np.pi) + log_normal_interval(
            (a2 - center) / cond_sd, (b2 - center) / cond_sd
        )

    lo_search = alpha if isfinite(alpha) else (beta if isfinite(beta) else 0.0) - SEARCH_SPAN
    hi_search = beta if isfinite(beta) else (alpha if isfinite(alpha) else 0.0) + SEARCH_SPAN
    lo_search, hi_search = min(lo_search, hi_search), max(lo_search, hi_search)

    result = minimize_scalar(
        lambda z: -log_integrand(z), bounds=(lo_search, hi_search),
        method='bounded', options={'xatol': 1e-10},
    )
    z_star = float(result.x)
    f_star = log_integrand(z_star)
    if f_star == -inf:
        return -inf

    lower = max(alpha, z_star - INTEGRATION_WINDOW)
    upper = min(beta, z_star + INTEGRATION_WINDOW)
    if not lower < upper:
        return -inf
    points = [z_star] if lower < z_star < upper else None

    with warnings.catch_warnings():
        warnings.simplefilter('error', IntegrationWarning)
        try:
            mass, _ = quad(
                lambda z: exp(log_integrand(z) - f_star), lower, upper,
                points=points, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT,
            )
        except IntegrationWarning as e:
            raise NumericalFailure("bvn_rectangle", str(e)) from e

    if not mass > 0:
        return -inf
    return min(0.0, f_star + log(mass))


def bvn_rectangle(mean: Sequence[float], cov: Sequence[Sequence[float]], rect: Rect) -> float:
    """P[(W1, W2) in rect] for a bivariate normal (see log_bvn_rectangle)."""
    return exp(log_bvn_rectangle(mean, cov, rect))


def _check_rho_lambda(rho: float, lam: float) -> None:
    if not -1.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [-1, 1], got {rho}")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")


def log_m_n(rho: float, lam: float) -> float:
    """log m(rho, lambda), m = E[e^{lambda (W + W' - 1)} 1_S]."""
    _check_rho_lambda(rho, lam)
    event = truncation_event(lam)
    lo, hi = event.lower, event.upper
    sd = 1.0 / sqrt(lam)

    if rho == 1.0:
        # W = W' ~ N(2, 1/lambda) after tilting
        return lam + _log_univariate(2.0, sd, lo, hi)
    if rho == -1.0:
        # W' = -W with tilted mean 0; both in [1-h, 1+h] needs h >= 1
        return -lam + _log_univariate(0.0, sd, max(lo, -hi), min(hi, -lo))

    shift = 1.0 + rho
    cov = np.array([[1.0, rho], [rho, 1.0]]) / lam
    return lam * rho + log_bvn_rectangle((shift, shift), cov, event.rect)


def m_n(rho: float, lam: float) -> float:
    """m(rho, lambda); +inf when the linear value overflows."""
    value = log_m_n(rho, lam)
    try:
        return exp(value)
    except OverflowError:
        return inf


def m_n_monte_carlo(rho: float, lam: float, n_samples: int, rng: np.random.Generator) -> MonteCarloEstimate:
    """Direct sampling of e^{lambda (W + W' - 1)} 1_S, the oracle for the tilted value."""
    _check_rho_lambda(rho, lam)
    event = truncation_event(lam)
    z1 = rng.standard_normal(n_samples)
    z2 = rng.standard_normal(n_samples)
    scale = 1.0 / sqrt(lam)
    w1 = scale * z1
    w2 = scale * (rho * z1 + sqrt(max(0.0, 1.0 - rho * rho)) * z2)
    inside = (w1 >= event.lower) & (w1 <= event.upper) & (w2 >= event.lower) & (w2 <= event.upper)
    samples = np.where(inside, np.exp(lam * (w1 + w2 - 1.0)), 0.0)
    mean, se = mean_and_se(samples)
    return MonteCarloEstimate(value=float(mean), standard_error=float(se), n_trials=n_samples)


def sum_projection_bound(rho: float, lam: float) -> float:
    """
    log E[e^{lambda (W'' - 1)} 1{|W'' - 2| <= 2 lambda^{-1/4}}], W'' ~ N(0, 2(1+rho)/lambda).

    Upper bound on log m(rho, lambda) through the sum W + W'.
    """
    _check_rho_lambda(rho, lam)
    h = lam ** -0.25
    sd = sqrt(2.0 * (1.0 + rho) / lam)
    return lam * rho + _log_univariate(2.0 * (1.0 + rho), sd, 2.0 - 2.0 * h, 2.0 + 2.0 * h)


def prop5_target(rho: float) -> float:
    """(rho / (1 + rho))_+, set to 0 at rho = -1."""
    if rho <= 0.0:
        return 0.0
    return rho / (1.0 + rho)


def prop5_margin(rho_grid: Sequence[float], lam: float) -> List[Prop5Row]:
    """(1/lambda) log m(rho) - (rho/(1+rho))_+ per rho, raw and scaled by lambda^{1/4}."""
    rows = []
    for rho in rho_grid:
        log_m = log_m_n(rho, lam)
        normalized = log_m / lam
        target = prop5_target(rho)
        margin = normalized - target
        rows.append(Prop5Row(
            rho=rho,
            lam=lam,
            log_m=log_m,
            normalized=normalized,
            target=target,
            margin=margin,
            scaled_margin=margin * lam ** 0.25,
        ))
    return rows


def calibrate_prop5_constant(
    rho_grid: Optional[Sequence[float]] = None,
    lambda_grid: Sequence[float] = (1e2, 1e3, 1e4, 1e5),
) -> Prop5Calibration:
    """Largest scaled margin over a (rho, lambda) grid; PROP5_CONSTANT must dominate it."""
    rhos = [float(r) for r in (np.linspace(-1.0, 1.0, 41) if rho_grid is None else rho_grid)]
    best = (-inf, rhos[0], lambda_grid[0])
    n_points = 0
    for lam in lambda_grid:
        for row in prop5_margin(rhos, lam):
            n_points += 1
            if row.scaled_margin > best[0]:
                best = (row.scaled_margin, row.rho, lam)
    logger.info(f"Calibrated truncated-moment constant {best[0]:.6g} at rho={best[1]:g}, lambda={best[2]:g}")
    return Prop5Calibration(constant=best[0], argmax_rho=best[1], argmax_lambda=best[2], n_points=n_points)


def conditional_chi_square_bound(prior: DiscretePrior, lam: float) -> ConditionalChiSquareBound:
    """
    E[m(rho, lambda)] summed exactly over the lifted overlap law, in log space, and
    its finite-size correction E[m] / P[Omega].
    """
    pmf = lifted_overlap_pmf(prior)
    log_q = pmf.log_probability_array()
    log_terms = np.array([log_m_n(float(rho), lam) for rho in pmf.value_array()])
    log_expected = float(logsumexp(log_q + log_terms))
    omega = omega_probability(lam)
    try:
        expected = exp(log_expected)
    except OverflowError:
        expected = inf
    return ConditionalChiSquareBound(
        lam=lam,
        expected_m=expected,
        log_expected_m=log_expected,
        normalized=log_expected / lam,
        omega_probability=omega,
        corrected_normalized=(log_expected - log(omega)) / lam,
    )


def supremum_gap(t_values: Sequence[float], rates: Sequence[float]) -> float:
    """max over t of (t/(1+t) - r(t)/2)_+; infinite rates contribute 0."""
    best = 0.0
    for t, rate in zip(t_values, rates):
        if rate == inf:
            continue
        best = max(best, t / (1.0 + t) - rate / 2.0)
    return best


def theorem4_rhs(prior: DiscretePrior, t_grid: Optional[Sequence[float]] = None) -> float:
    """sup over the grid of (t/(1+t) - r(t)/2)_+ with the exact lifted rate function."""
    rows = rate_function(prior, default_t_grid() if t_grid is None else t_grid)
    return supremum_gap([row.t for row in rows], [row.rate for row in rows])


def theorem4_finite_size_bound(prior: DiscretePrior, lam: float) -> float:
    """
    Exact finite-size upper bound on (1/lambda) log(E[m] / P[Omega]).

    Each atom rho contributes at most log q(rho) + log m(rho). For rho > 0,
    q(rho) <= P[overlap >= rho] = M^{-r(rho)} and log m(rho)/lambda is
    rho/(1+rho) plus its margin; atoms rho <= 0 contribute at most 0 since
    m(rho) <= e^{lambda rho}. Summing over the atoms costs log(#atoms)/lambda.
    """
    pmf = lifted_overlap_pmf(prior)
    best = 0.0
    for rho in pmf.value_array().tolist():
        if rho <= 0.0:
            continue
        best = max(best, (pmf.log_tail(rho) + log_m_n(rho, lam)) / lam)
    return best + log(len(pmf.values)) / lam - log(omega_probability(lam)) / lam


def critical_lambda(prior: DiscretePrior) -> float:
    """lambda_N = 2 log M_N."""
    return 2.0 * log_cardinality(prior)
