"""
Rank-one tensor lifting. Every tensor quantity factors through the base overlap,
<x^{⊗d}, x'^{⊗d}> = <x, x'>^d, so tensors stay virtual unless materialized.
"""

from collections import defaultdict
from fractions import Fraction
from functools import lru_cache, reduce
from math import inf
from typing import Dict, List, Optional, Sequence
import logging

import numpy as np

from ..models.overlap import OVERLAP_TOLERANCE, OverlapPMF, RateFunctionRow
from ..models.prior import DiscretePrior
from ..models.signal import SignalVector, TensorSignal
from ..utils.error_handlers import CardinalityExceeded, DimensionMismatch, DomainError
from .prior_service import base_overlap_pmf, build_pmf, log_cardinality
from .support import support_arrays

logger = logging.getLogger(__name__)

__all__ = [
    "OVERLAP_TOLERANCE", "tensor_overlap", "lifted_overlap_pmf", "materialize_tensor",
    "rate_function", "rate_rows", "default_t_grid",
    "pair_enumeration_pmf",
]

PAIR_ENUMERATION_CAP = 4096


def tensor_overlap(a: SignalVector, b: SignalVector, d: int) -> float:
    """
    <a^{⊗d}, b^{⊗d}> from the sparse intersection of a and b.

    Raises:
        DimensionMismatch: when a and b live in different dimensions
    """
    if a.dim != b.dim:
        raise DimensionMismatch(a.dim, b.dim, "tensor_overlap")
    if d < 1:
        raise DomainError("tensor order must be at least 1")

    signs_b = dict(zip(b.indices, b.signs))
    shared = sum(s * signs_b[i] for i, s in zip(a.indices, a.signs) if i in signs_b)
    if a.k == b.k:
        rho = shared / a.k
    else:
        rho = shared / (a.k * b.k) ** 0.5
    return rho ** d


@lru_cache(maxsize=64)
def lifted_overlap_pmf(prior: DiscretePrior) -> OverlapPMF:
    """Law of <x, x'>^d: base atoms raised to the power d, colliding atoms merged."""
    base = base_overlap_pmf(prior)
    if prior.d == 1:
        return base

    terms: Dict[Fraction, List] = defaultdict(list)
    if base.exact:
        for value, mass in zip(base.values, base.probabilities):
            terms[value ** prior.d].append(mass)
    else:
        for value, log_mass in zip(base.values, base.log_probability_array().tolist()):
            terms[value ** prior.d].append(log_mass)
    return build_pmf(terms, base.exact)


def materialize_tensor(signal: TensorSignal, cap: int) -> np.ndarray:
    """
    Dense row-major x^{⊗d}: entry (i1, ..., id) sits at i1 p^{d-1} + ... + id.

    Raises:
        CardinalityExceeded: when p^d > cap
    """
    size = signal.ambient_dim
    if size > cap:
        raise CardinalityExceeded("dense tensor", size, cap)
    x = signal.base.to_dense()
    return reduce(np.multiply.outer, [x] * signal.order).ravel()


def default_t_grid() -> List[float]:
    """101 equally spaced points on [0, 1]."""
    return [i / 100 for i in range(101)]


def rate_rows(pmf: OverlapPMF, log_m: float, t_grid: Sequence[float]) -> List[RateFunctionRow]:
    """Rate function rows of an arbitrary overlap law normalized by log M."""
    if log_m <= 0:
        raise DomainError("rate function needs log M > 0")

    rows = []
    for t in t_grid:
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t={t} outside [0, 1]")
        log_tail = pmf.log_tail(t)
        if log_tail == -inf:
            rate = inf
        elif log_tail == 0.0:
            rate = 0.0
        else:
            rate = -log_tail / log_m
        bound = 2.0 * t / (1.0 + t)
        rows.append(RateFunctionRow(
            t=t,
            tail=pmf.tail(t),
            rate=rate,
            bound=bound,
            margin=rate - bound,
        ))
    return rows


def rate_function(prior: DiscretePrior, t_grid: Optional[Sequence[float]] = None) -> List[RateFunctionRow]:
    """
    Empirical overlap rate function r(t) = -log P[<X,X'> >= t] / log M of the lifted
    prior, with its margin over 2t/(1+t). Zero tails give rate +inf.
    """
    grid = default_t_grid() if t_grid is None else list(t_grid)
    rows = rate_rows(lifted_overlap_pmf(prior), log_cardinality(prior), grid)
    logger.debug(f"Rate function of {prior.label} on {len(grid)} points")
    return rows


def pair_enumeration_pmf(prior: DiscretePrior, cap: int = PAIR_ENUMERATION_CAP) -> OverlapPMF:
    """
    Law of <x, x'>^d from every ordered pair of support vectors, in exact arithmetic.

    Brute-force reference for lifted_overlap_pmf on small supports.

    Raises:
        CardinalityExceeded: when the support has more than cap vectors
    """
    support = support_arrays(prior, cap)
    size = support.size
    incidence = np.zeros((size, prior.p), dtype=np.int64)
    incidence[np.repeat(np.arange(size), support.k), support.indices.ravel()] = support.signs.ravel()
    shared, counts = np.unique(incidence @ incidence.T, return_counts=True)

    total = size * size
    terms: Dict[Fraction, List] = defaultdict(list)
    for s, count in zip(shared.tolist(), counts.tolist()):
        terms[Fraction(s, support.k) ** prior.d].append(Fraction(count, total))
    return build_pmf(terms, exact=True)
