"""
Support enumeration in array form.

Order is lexicographic: index sets ascending, and within an index set sign
patterns in binary counting order with the first coordinate as the most
significant bit (bit set = negative sign). The all-positive pattern comes first.
"""

from functools import lru_cache
from itertools import chain, combinations
from math import comb
import logging

import numpy as np

from ..models.prior import DiscretePrior, PriorKind, SupportArrays
from ..utils.error_handlers import CardinalityExceeded

logger = logging.getLogger(__name__)


def support_size(prior: DiscretePrior) -> int:
    """Number of signed support vectors actually enumerated and sampled."""
    if prior.kind == PriorKind.ORTHOGONAL:
        return prior.p
    size = comb(prior.p, prior.k)
    if prior.is_signed:
        size *= 2 ** prior.k
    return size


def sign_patterns(k: int) -> np.ndarray:
    """All 2^k sign vectors of length k in enumeration order, shape (2^k, k)."""
    codes = np.arange(2 ** k, dtype=np.int64)[:, None]
    bits = (codes >> np.arange(k - 1, -1, -1, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


@lru_cache(maxsize=8)
def support_arrays(prior: DiscretePrior, cap: int) -> SupportArrays:
    """
    Enumerates the support as (size, k) index and sign arrays.

    Raises:
        CardinalityExceeded: if the support has more than cap elements
    """
    size = support_size(prior)
    if size > cap:
        raise CardinalityExceeded("support", size, cap)

    if prior.kind == PriorKind.ORTHOGONAL:
        indices = np.arange(prior.p, dtype=np.int64).reshape(prior.p, 1)
        signs = np.ones((prior.p, 1), dtype=np.int8)
    else:
        n_sets = comb(prior.p, prior.k)
        flat = np.fromiter(
            chain.from_iterable(combinations(range(prior.p), prior.k)),
            dtype=np.int64,
            count=n_sets * prior.k,
        )
        sets = flat.reshape(n_sets, prior.k)
        if prior.is_signed:
            patterns = sign_patterns(prior.k)
            indices = np.repeat(sets, len(patterns), axis=0)
            signs = np.tile(patterns, (n_sets, 1))
        else:
            indices = sets
            signs = np.ones_like(sets, dtype=np.int8)

    indices.setflags(write=False)
    signs.setflags(write=False)
    logger.debug(f"Enumerated support of {prior.label}: {size} vectors")
    return SupportArrays(p=prior.p, k=prior.k, indices=indices, signs=signs)


def support_overlaps(support: SupportArrays, j: int) -> np.ndarray:
    """Base overlaps <x_i, x_j> of every support vector with vector j, shape (size,)."""
    row = np.zeros(support.p, dtype=np.int64)
    row[support.indices[j]] = support.signs[j]
    products = row[support.indices] * support.signs
    return products.sum(axis=1) / support.k
