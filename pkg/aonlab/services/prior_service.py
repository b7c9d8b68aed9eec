"""
Discrete priors on the unit sphere: construction, sampling, enumeration and the
exact law of the overlap of two independent draws.
"""

from collections import defaultdict
from concurrent.futures import Executor
from fractions import Fraction
from functools import lru_cache
from math import comb, log
from typing import Dict, List, Optional, Sequence, Union
import logging

import numpy as np
from pydantic import ValidationError
from scipy.special import gammaln, logsumexp
from scipy.stats import binom, hypergeom

from ..models.config import SweepConfig
from ..models.estimates import MaxProjectionEstimate
from ..models.overlap import OverlapPMF, SpreadProfileRow
from ..models.prior import DiscretePrior, PriorKind
from ..models.signal import SignalVector
from ..utils.error_handlers import DomainError
from ..utils.parallel import run_trials
from ..utils.rng import TrialStreams
from ..utils.stats import mean_and_se
from .support import support_arrays, support_size

logger = logging.getLogger(__name__)

EXACT_PMF_LIMIT = 64
DEFAULT_ENUMERATION_CAP = 5_000_000
MIN_PROJECTION_TRIALS = 1000

__all__ = [
    "make_prior", "prior_from_config", "log_cardinality", "cardinality", "support_size",
    "sample_signal", "enumerate_support", "base_overlap_pmf", "max_projection_moment",
    "overlap_spread_profile", "prior_mean_norm_sq", "build_pmf",
]


def make_prior(
    kind: Union[PriorKind, str],
    p: Optional[int] = None,
    k: Optional[int] = None,
    m: Optional[int] = None,
    d: int = 1,
) -> DiscretePrior:
    """
    Builds a prior. The orthogonal kind takes M via m; sparse kinds take p and k.

    Raises:
        DomainError: for k > p, k = 0, M < 2, d < 1 or missing parameters
    """
    try:
        kind = PriorKind(kind)
    except ValueError:
        raise DomainError(f"Unknown prior kind: {kind!r}")

    if kind == PriorKind.ORTHOGONAL:
        if m is None:
            raise DomainError("orthogonal prior needs M")
        p, k = m, 1
    elif p is None or k is None:
        raise DomainError(f"{kind.value} prior needs p and k")

    try:
        return DiscretePrior(kind=kind, p=p, k=k, d=d)
    except ValidationError as e:
        raise DomainError(f"Invalid prior parameters: {e.errors()[0]['msg']}") from e


def prior_from_config(config: SweepConfig) -> DiscretePrior:
    return make_prior(config.prior, p=config.p, k=config.k, m=config.m, d=config.d)


def cardinality(prior: DiscretePrior) -> int:
    """M_N: number of distinct lifted signals (sign quotient for even-order signed priors)."""
    size = support_size(prior)
    return size // 2 if prior.sign_quotient else size


def log_cardinality(prior: DiscretePrior) -> float:
    """log M_N in nats via log-gamma."""
    if prior.kind == PriorKind.ORTHOGONAL:
        return log(prior.p)
    p, k = prior.p, prior.k
    value = float(gammaln(p + 1) - gammaln(k + 1) - gammaln(p - k + 1))
    if prior.is_signed:
        value += k * log(2.0)
        if prior.sign_quotient:
            value -= log(2.0)
    return value


def sample_signal(prior: DiscretePrior, rng: np.random.Generator) -> SignalVector:
    """Uniform draw from the (signed) support using only the given stream."""
    if prior.kind == PriorKind.ORTHOGONAL:
        i = int(rng.integers(prior.p))
        return SignalVector(dim=prior.p, indices=(i,), signs=(1,))

    chosen = np.sort(rng.choice(prior.p, size=prior.k, replace=False))
    if prior.is_signed:
        signs = rng.choice(np.array([-1, 1], dtype=np.int64), size=prior.k)
    else:
        signs = np.ones(prior.k, dtype=np.int64)
    return SignalVector(
        dim=prior.p,
        indices=tuple(int(i) for i in chosen),
        signs=tuple(int(s) for s in signs),
    )


def enumerate_support(prior: DiscretePrior, cap: int = DEFAULT_ENUMERATION_CAP) -> List[SignalVector]:
    """
    All support vectors in lexicographic order (index set, then sign pattern).

    Raises:
        CardinalityExceeded: when the support has more than cap vectors
    """
    support = support_arrays(prior, cap)
    return [
        SignalVector(dim=prior.p, indices=tuple(idx.tolist()), signs=tuple(sgn.tolist()))
        for idx, sgn in zip(support.indices, support.signs)
    ]


def build_pmf(terms: Dict[Fraction, List], exact: bool) -> OverlapPMF:
    """
    Merges atom contributions into a pmf.

    For exact laws the contributions are Fractions; otherwise they are natural
    logs of masses and are combined with logsumexp, then renormalized in log
    space so rounding in the inputs cannot push the total away from 1.
    """
    values = sorted(terms)
    if exact:
        probabilities = tuple(sum(terms[v], Fraction(0)) for v in values)
        return OverlapPMF(values=tuple(values), probabilities=probabilities, exact=True)

    merged = np.array([logsumexp(terms[v]) for v in values], dtype=np.float64)
    merged -= logsumexp(merged)
    log_probs = tuple(float(lp) for lp in merged)
    probabilities = tuple(float(np.exp(lp)) for lp in log_probs)
    return OverlapPMF(
        values=tuple(values),
        probabilities=probabilities,
        exact=False,
        log_probabilities=log_probs,
    )


def _shared_support_law(p: int, k: int, exact: bool) -> Dict[int, Union[Fraction, float]]:
    """Law of |S ∩ S'| for independent uniform k-subsets: exact masses or log masses."""
    s_values = range(max(0, 2 * k - p), k + 1)
    if exact:
        total = comb(p, k)
        return {s: Fraction(comb(k, s) * comb(p - k, k - s), total) for s in s_values}
    dist = hypergeom(p, k, k)
    return {s: float(dist.logpmf(s)) for s in s_values}


@lru_cache(maxsize=64)
def base_overlap_pmf(prior: DiscretePrior) -> OverlapPMF:
    """
    Exact law of <x, x'> for two independent draws from the prior.

    Bernoulli: s/k with s hypergeometric. Bernoulli-Rademacher: the s shared
    coordinates carry independent fair signs, so rho = (s - 2j)/k with
    j ~ Binomial(s, 1/2). Orthogonal: {0, 1} with masses (M-1)/M and 1/M.
    """
    exact = prior.p <= EXACT_PMF_LIMIT
    terms: Dict[Fraction, List] = defaultdict(list)

    if prior.kind == PriorKind.ORTHOGONAL:
        m = prior.p
        if exact:
            terms[Fraction(0)].append(Fraction(m - 1, m))
            terms[Fraction(1)].append(Fraction(1, m))
        else:
            terms[Fraction(0)].append(log(m - 1) - log(m))
            terms[Fraction(1)].append(-log(m))
        return build_pmf(terms, exact)

    k = prior.k
    shared = _shared_support_law(prior.p, k, exact)
    for s, mass in shared.items():
        if not prior.is_signed:
            terms[Fraction(s, k)].append(mass)
            continue
        for j in range(s + 1):
            value = Fraction(s - 2 * j, k)
            if exact:
                terms[value].append(mass * Fraction(comb(s, j), 2 ** s))
            else:
                terms[value].append(mass + float(binom.logpmf(j, s, 0.5)))

    return build_pmf(terms, exact)


def prior_mean_norm_sq(prior: DiscretePrior) -> float:
    """||E X||^2 = E <X, X'>^d, the complement of the MMSE at lambda = 0."""
    pmf = base_overlap_pmf(prior)
    return float(np.sum(pmf.probability_array() * pmf.value_array() ** prior.d))


def overlap_spread_profile(prior: DiscretePrior, t_grid: Sequence[float]) -> List[SpreadProfileRow]:
    """
    Finite-size spread profile (1/log M) log P[<x, x'> >= t] of the base overlap.

    The spreading condition is a statement about N -> infinity; this only reports
    the finite-size quantity.
    """
    log_m = log_cardinality(prior)
    if log_m <= 0:
        raise DomainError("profile needs a prior with at least two signals")
    pmf = base_overlap_pmf(prior)
    rows = []
    for t in t_grid:
        log_tail = pmf.log_tail(t)
        rows.append(SpreadProfileRow(t=t, log_tail=log_tail, normalized=log_tail / log_m))
    return rows


def max_projection_moment(
    prior: DiscretePrior,
    n_trials: int,
    streams: TrialStreams,
    executor: Optional[Executor] = None,
    gram_cap: int = 4096,
    ambient_cap: int = 4_000_000,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> MaxProjectionEstimate:
    """
    Monte-Carlo estimate of E max_i <x_i^{⊗d}, Z>^2 with the reference 2 log M + 2.

    Raises:
        CardinalityExceeded: if no projection backend fits the caps
        DomainError: for fewer than MIN_PROJECTION_TRIALS trials
    """
    from .channel_service import build_instance

    if n_trials < MIN_PROJECTION_TRIALS:
        raise DomainError(f"max projection moment needs at least {MIN_PROJECTION_TRIALS} trials, got {n_trials}")

    instance = build_instance(
        prior, 0.0, gram_cap=gram_cap, ambient_cap=ambient_cap, enumeration_cap=enumeration_cap
    )
    backend = instance.backend

    def kernel(rng: np.random.Generator) -> float:
        noise = backend.noise(rng)
        return float(np.max(noise * noise))

    samples = run_trials(kernel, n_trials, streams, executor)
    mean, se = mean_and_se(samples)
    log_m = log_cardinality(prior)
    ratio = float(mean) / log_m if log_m > 0 else None
    logger.info(f"Max projection moment for {prior.label}: {float(mean):.4f} ± {float(se):.4f}")
    return MaxProjectionEstimate(
        value=float(mean),
        standard_error=float(se),
        n_trials=n_trials,
        log_m=log_m,
        reference=2.0 * log_m + 2.0,
        ratio=ratio,
    )
