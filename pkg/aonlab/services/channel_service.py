"""
The Gaussian additive channel Y = sqrt(lambda) X + Z, simulated through the
projections of Y onto the support, and its partition function Z(Y).
"""

from math import log, sqrt
import logging

import numpy as np
from scipy import sparse
from scipy.linalg import LinAlgError, cholesky
from scipy.special import logsumexp

from ..models.channel import ChannelInstance, DenseObservation, GramFactorization, ProjectionObservation
from ..models.prior import DiscretePrior, PriorKind
from ..models.signal import SignalVector, TensorSignal
from ..utils.cache import CacheManager
from ..utils.error_handlers import CardinalityExceeded, DomainError, FactorizationFailure
from ..utils.logger import ExperimentEventLogger
from .prior_service import DEFAULT_ENUMERATION_CAP, log_cardinality
from .projection_backends import ContractionBackend, GramBackend, IdentityBackend, PairSumBackend
from .support import support_arrays, support_size
from .tensor_service import materialize_tensor

logger = logging.getLogger(__name__)

JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)
DEFAULT_GRAM_CAP = 4096
DEFAULT_AMBIENT_CAP = 4_000_000


def gram_from_support(prior: DiscretePrior, cap: int = DEFAULT_GRAM_CAP) -> np.ndarray:
    """G_ij = <x_i, x_j>^d, computed exactly on integers before scaling."""
    size = support_size(prior)
    if size > cap:
        raise CardinalityExceeded("Gram matrix", size, cap)
    if prior.kind == PriorKind.ORTHOGONAL:
        return np.eye(size)

    support = support_arrays(prior, cap)
    rows = np.repeat(np.arange(size), support.k)
    incidence = sparse.csr_matrix(
        (support.signs.ravel().astype(np.int64), (rows, support.indices.ravel())),
        shape=(size, prior.p),
    )
    shared = (incidence @ incidence.T).toarray()
    return (shared / support.k) ** prior.d


def factorize(gram: np.ndarray) -> GramFactorization:
    """
    Cholesky factor of G with the smallest jitter from the ladder that succeeds.

    Raises:
        FactorizationFailure: when even the largest jitter fails
    """
    identity = np.eye(gram.shape[0])
    for jitter in JITTER_LADDER:
        try:
            factor = cholesky(gram + jitter * identity, lower=True)
        except LinAlgError:
            logger.debug(f"Cholesky failed with jitter {jitter:g}")
            continue
        if jitter > 0:
            logger.info(f"Gram factorization needed jitter {jitter:g}")
        return GramFactorization(gram=gram, factor=factor, jitter=jitter)
    raise FactorizationFailure(gram.shape[0], JITTER_LADDER[-1])


def gram_matrix(prior: DiscretePrior, cap: int = DEFAULT_GRAM_CAP) -> GramFactorization:
    """
    Gram matrix of the lifted support and its lower-triangular factor.

    Raises:
        CardinalityExceeded: support larger than cap
        FactorizationFailure: jitter escalation beyond 1e-6
    """
    if prior.kind == PriorKind.ORTHOGONAL:
        size = support_size(prior)
        if size > cap:
            raise CardinalityExceeded("Gram matrix", size, cap)
        eye = np.eye(size)
        return GramFactorization(gram=eye, factor=eye, jitter=0.0)
    return factorize(gram_from_support(prior, cap))


def build_instance(
    prior: DiscretePrior,
    lam: float = 0.0,
    gram_cap: int = DEFAULT_GRAM_CAP,
    ambient_cap: int = DEFAULT_AMBIENT_CAP,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> ChannelInstance:
    """
    Builds (or reuses) the channel for a prior and sets its SNR.

    Backend choice: identity for the orthogonal prior, a Gram factor when the
    support fits gram_cap, otherwise pair sums for order-2 sparse priors or
    tensor contraction, either one only when p^d fits ambient_cap.

    Raises:
        CardinalityExceeded: when no backend fits the caps
    """
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")

    params = {
        "prior": prior.label,
        "gram_cap": gram_cap,
        "ambient_cap": ambient_cap,
        "enumeration_cap": enumeration_cap,
    }
    cached = CacheManager.get_cached_instance(params)
    if cached is not None:
        return cached.with_lambda(lam)

    size = support_size(prior)
    support = support_arrays(prior, enumeration_cap)
    if prior.kind == PriorKind.ORTHOGONAL:
        backend = IdentityBackend(size)
    elif size <= gram_cap:
        backend = GramBackend(gram_matrix(prior, gram_cap))
    elif prior.d == 2 and prior.p ** 2 <= ambient_cap:
        backend = PairSumBackend(support)
    elif prior.p ** prior.d <= ambient_cap:
        backend = ContractionBackend(support, prior.d)
    else:
        raise CardinalityExceeded("support (no projection backend fits)", size, gram_cap)

    instance = ChannelInstance(
        prior=prior,
        lam=lam,
        support=support,
        backend=backend,
        log_m=log_cardinality(prior),
    )
    ExperimentEventLogger.instance_built(prior.label, backend.name, size, getattr(backend, "jitter", 0.0))
    CacheManager.cache_instance(params, instance)
    return instance


def lambda_for_beta(prior: DiscretePrior, beta: float) -> float:
    """lambda = beta * 2 log M_N, which puts the critical SNR at beta = 1."""
    if beta < 0:
        raise DomainError(f"beta must be nonnegative, got {beta}")
    return beta * 2.0 * log_cardinality(prior)


def sample_projections(instance: ChannelInstance, rng: np.random.Generator) -> ProjectionObservation:
    """Draws J uniformly, then the noise: u = sqrt(lambda) G e_J + L xi."""
    j = int(rng.integers(instance.size))
    noise = instance.backend.noise(rng)
    u = sqrt(instance.lam) * instance.backend.signal_row(j) + noise
    return ProjectionObservation(u=u, true_index=j, lam=instance.lam)


def null_projections(instance: ChannelInstance, rng: np.random.Generator) -> ProjectionObservation:
    """Noise-only projections (Y = Z) carrying the instance lambda; J is drawn but unused."""
    j = int(rng.integers(instance.size))
    return ProjectionObservation(u=instance.backend.noise(rng), true_index=j, lam=instance.lam)


def _signal_vector(instance: ChannelInstance, j: int) -> SignalVector:
    support = instance.support
    return SignalVector(
        dim=support.p,
        indices=tuple(support.indices[j].tolist()),
        signs=tuple(support.signs[j].tolist()),
    )


def sample_dense(
    instance: ChannelInstance,
    rng: np.random.Generator,
    cap: int = DEFAULT_AMBIENT_CAP,
) -> DenseObservation:
    """
    Draws the full observation Y = sqrt(lambda) x_J^{⊗d} + Z of length p^d.

    Draw order matches sample_projections (J first, then the noise), so with the
    contraction and pair-sum backends both paths see the same Z.

    Raises:
        CardinalityExceeded: when p^d > cap
    """
    prior = instance.prior
    ambient = prior.p ** prior.d
    if ambient > cap:
        raise CardinalityExceeded("dense observation", ambient, cap)

    j = int(rng.integers(instance.size))
    signal = TensorSignal(base=_signal_vector(instance, j), order=prior.d)
    z = rng.standard_normal(ambient)
    y = sqrt(instance.lam) * materialize_tensor(signal, cap) + z
    return DenseObservation(y=y, true_index=j, lam=instance.lam, signal=signal)


def project_dense(instance: ChannelInstance, obs: DenseObservation) -> ProjectionObservation:
    """Projects a dense observation onto every support tensor."""
    contraction = ContractionBackend(instance.support, instance.prior.d)
    return ProjectionObservation(u=contraction.contract(obs.y), true_index=obs.true_index, lam=obs.lam)


def log_partition(obs: ProjectionObservation) -> float:
    """
    log Z(Y) = log[(1/M) sum_i exp(sqrt(lambda) u_i - lambda/2)] by max-shifted
    log-sum-exp. Exactly 0 at lambda = 0.
    """
    if obs.lam == 0:
        return 0.0
    u = np.asarray(obs.u, dtype=np.float64)
    return float(logsumexp(sqrt(obs.lam) * u - obs.lam / 2.0)) - log(u.size)
