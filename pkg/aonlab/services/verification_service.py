"""
Invariant suite behind `verify`.

Every check runs at fixed seeds derived from the configured master seed and
returns (passed, detail). Monte-Carlo checks use a 4-sigma tolerance.
"""

from concurrent.futures import Executor, ThreadPoolExecutor
from fractions import Fraction
from math import erf, exp, inf, log, pi, sqrt
from typing import Callable, List, Optional, Tuple
import logging

import numpy as np
import pandas as pd
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import expit, ndtr

from ..models.config import CheckResult, SweepConfig, parse_grid
from ..models.channel import ProjectionObservation
from ..models.prior import DiscretePrior
from ..models.signal import TensorSignal
from ..utils.csv_writer import write_csv
from ..utils.error_handlers import EXIT_FAILURE, EXIT_OK
from ..utils.logger import VerificationEventLogger
from ..utils.rng import TrialStreams
from ..utils.stats import mean_and_se, median_of_means
from .channel_service import (
    build_instance,
    gram_matrix,
    lambda_for_beta,
    log_partition,
    null_projections,
    project_dense,
    sample_dense,
    sample_projections,
)
from .divergence_service import (
    binary_divergence,
    chi_square_exact,
    chi_square_monte_carlo,
    immse_curve_check,
    kl_monte_carlo,
    mutual_information_check,
)
from .estimator_service import (
    map_estimate,
    map_mse_monte_carlo,
    mmse_monte_carlo,
    posterior_statistics,
    posterior_weights,
    simulate_beta_grid,
)
from .experiment_service import records_frame, sweep_records, transition_width
from .prior_service import (
    base_overlap_pmf,
    enumerate_support,
    log_cardinality,
    make_prior,
    max_projection_moment,
    sample_signal,
)
from .second_moment_service import (
    PROP5_CONSTANT,
    bvn_rectangle,
    sum_projection_bound,
    conditional_chi_square_bound,
    critical_lambda,
    log_m_n,
    m_n,
    m_n_monte_carlo,
    omega_probability,
    prop5_margin,
    theorem4_finite_size_bound,
    theorem4_rhs,
)
from .tensor_service import (
    default_t_grid,
    lifted_overlap_pmf,
    materialize_tensor,
    pair_enumeration_pmf,
    rate_function,
    tensor_overlap,
)

logger = logging.getLogger(__name__)

N_SIGMA = 4.0
FAULT_SCALE = 1e-3
HERMITE_NODES = 80

CheckFn = Callable[["VerifyContext"], Tuple[bool, str]]
CHECKS: List[Tuple[str, str, CheckFn]] = []


def check(module: str, name: str) -> Callable[[CheckFn], CheckFn]:
    """Registers a check of the suite under its module."""

    def decorator(fn: CheckFn) -> CheckFn:
        CHECKS.append((module, name, fn))
        return fn

    return decorator


class VerifyContext:
    """Seeds, caps, the harness executor and the injected fault of one verify run."""

    def __init__(self, config: SweepConfig, executor: Optional[Executor] = None):
        self.config = config
        self.executor = executor
        self.fault = config.inject_fault

    def streams(self, name: str) -> TrialStreams:
        return TrialStreams(self.config.seed, f"verify/{name}")

    def rng(self, name: str) -> np.random.Generator:
        return self.streams(name).generator(0)

    def instance(self, prior: DiscretePrior, lam: float = 0.0, **caps):
        caps.setdefault("gram_cap", self.config.gram_cap)
        caps.setdefault("ambient_cap", self.config.ambient_cap)
        caps.setdefault("enumeration_cap", self.config.enumeration_cap)
        return build_instance(prior, lam, **caps)

    def gram_under_test(self, prior: DiscretePrior) -> np.ndarray:
        """Gram matrix of the prior, with the diagonal perturbed under the gram-diagonal fault."""
        gram = gram_matrix(prior, self.config.gram_cap).gram.copy()
        if self.fault == "gram-diagonal":
            gram[np.diag_indices_from(gram)] *= 1.0 + FAULT_SCALE
        return gram


def _orthogonal2_expectation(lam: float, mean: float, var: float, fn) -> float:
    nodes, weights = hermegauss(HERMITE_NODES)
    return float(np.sum(weights * fn(mean + sqrt(var) * nodes)) / sqrt(2.0 * pi))


def orthogonal2_mmse(lam: float) -> float:
    """MMSE of the two-point orthogonal prior: 2 E(1 - sigmoid(sqrt(lambda) D))^2, D ~ N(sqrt(lambda), 2)."""
    root = sqrt(lam)
    return _orthogonal2_expectation(lam, root, 2.0, lambda d: 2.0 * (1.0 - expit(root * d)) ** 2)


def orthogonal2_kl(lam: float) -> float:
    """KL of the two-point orthogonal prior: lambda/2 - log 2 + E log(1 + e^V), V ~ N(-lambda, 2 lambda)."""
    return lam / 2.0 - log(2.0) + _orthogonal2_expectation(lam, -lam, 2.0 * lam, lambda v: np.logaddexp(0.0, v))


def _within(estimate: float, se: float, target: float, floor: float = 1e-12) -> bool:
    return abs(estimate - target) <= N_SIGMA * se + floor


# prior ----------------------------------------------------------------------

@check("prior", "support vectors have unit norm")
def _unit_norm(ctx: VerifyContext) -> Tuple[bool, str]:
    priors = (
        make_prior("bernoulli", p=6, k=2),
        make_prior("bernoulli-rademacher", p=5, k=2),
        make_prior("orthogonal", m=5),
    )
    worst = max(abs(x.norm_sq() - 1.0) for prior in priors for x in enumerate_support(prior))
    return worst <= 1e-12, f"max |norm^2 - 1| = {worst:.3g}"


@check("prior", "overlap laws match pair enumeration")
def _pmf_enumeration(ctx: VerifyContext) -> Tuple[bool, str]:
    worst = 0.0
    for kind in ("bernoulli", "bernoulli-rademacher"):
        for p, k in ((4, 2), (5, 3)):
            for d in (1, 2, 3):
                prior = make_prior(kind, p=p, k=k, d=d)
                worst = max(worst, lifted_overlap_pmf(prior).total_variation(pair_enumeration_pmf(prior)))
    return worst <= 1e-12, f"max total variation {worst:.3g}"


@check("prior", "base overlap examples")
def _pmf_examples(ctx: VerifyContext) -> Tuple[bool, str]:
    bern = base_overlap_pmf(make_prior("bernoulli", p=4, k=2)).as_dict()
    signed = base_overlap_pmf(make_prior("bernoulli-rademacher", p=4, k=2)).as_dict()
    ok_bern = bern == {Fraction(0): Fraction(1, 6), Fraction(1, 2): Fraction(2, 3), Fraction(1): Fraction(1, 6)}
    ok_signed = signed == {
        Fraction(-1): Fraction(1, 24), Fraction(-1, 2): Fraction(1, 3), Fraction(0): Fraction(1, 4),
        Fraction(1, 2): Fraction(1, 3), Fraction(1): Fraction(1, 24),
    }
    return ok_bern and ok_signed, f"bernoulli {ok_bern}, bernoulli-rademacher {ok_signed}"


@check("prior", "signed overlap is symmetric")
def _signed_symmetry(ctx: VerifyContext) -> Tuple[bool, str]:
    law = base_overlap_pmf(make_prior("bernoulli-rademacher", p=8, k=3)).as_dict()
    asymmetric = [v for v in law if law[v] != law.get(-v)]
    return not asymmetric, f"{len(asymmetric)} asymmetric atoms"


@check("prior", "signed lifted tail dominated by unsigned")
def _dominance(ctx: VerifyContext) -> Tuple[bool, str]:
    violations = 0
    for d in (2, 3):
        signed = lifted_overlap_pmf(make_prior("bernoulli-rademacher", p=30, k=4, d=d))
        plain = lifted_overlap_pmf(make_prior("bernoulli", p=30, k=4, d=d))
        violations += sum(1 for t in default_t_grid()[1:] if signed.tail(t) > plain.tail(t) + 1e-15)
    return violations == 0, f"{violations} violations"


@check("prior", "log cardinality matches enumeration")
def _cardinality(ctx: VerifyContext) -> Tuple[bool, str]:
    worst = 0.0
    for prior in (
        make_prior("orthogonal", m=7),
        make_prior("bernoulli", p=6, k=3),
        make_prior("bernoulli-rademacher", p=5, k=2, d=1),
        make_prior("bernoulli-rademacher", p=5, k=2, d=2),
        make_prior("bernoulli-rademacher", p=5, k=2, d=3),
    ):
        count = len(enumerate_support(prior))
        expected = log(count) - (log(2.0) if prior.sign_quotient else 0.0)
        worst = max(worst, abs(log_cardinality(prior) - expected))
    return worst <= 1e-12, f"max deviation {worst:.3g}"


@check("prior", "sampling is uniform")
def _uniform_sampling(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("orthogonal", m=3)
    rng = ctx.rng("uniform-sampling")
    n = 20000
    counts = np.bincount([sample_signal(prior, rng).indices[0] for _ in range(n)], minlength=3)
    se = sqrt((1 / 3) * (2 / 3) / n)
    worst = float(np.max(np.abs(counts / n - 1 / 3)))
    return worst <= N_SIGMA * se, f"max frequency deviation {worst:.4f} (se {se:.4f})"


@check("prior", "max projection moment of two coordinates")
def _max_projection(ctx: VerifyContext) -> Tuple[bool, str]:
    est = max_projection_moment(
        make_prior("orthogonal", m=2), 4000, ctx.streams("max-projection"), ctx.executor,
    )
    target = 1.0 + 2.0 / pi
    return _within(est.value, est.standard_error, target), f"{est.value:.4f} ± {est.standard_error:.4f} vs {target:.4f}"


# tensor ---------------------------------------------------------------------

@check("tensor", "sparse overlap matches dense tensors")
def _dense_overlap(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("bernoulli-rademacher", p=5, k=3)
    rng = ctx.rng("dense-overlap")
    worst = 0.0
    for _ in range(30):
        a, b = sample_signal(prior, rng), sample_signal(prior, rng)
        for d in (1, 2, 3):
            dense = float(materialize_tensor(TensorSignal(base=a, order=d), 10 ** 5)
                          @ materialize_tensor(TensorSignal(base=b, order=d), 10 ** 5))
            worst = max(worst, abs(dense - tensor_overlap(a, b, d)))
    return worst <= 1e-10, f"max deviation {worst:.3g}"


@check("tensor", "lifted examples")
def _lifted_examples(ctx: VerifyContext) -> Tuple[bool, str]:
    bern = lifted_overlap_pmf(make_prior("bernoulli", p=4, k=2, d=2)).as_dict()
    signed = lifted_overlap_pmf(make_prior("bernoulli-rademacher", p=4, k=2, d=2)).as_dict()
    quarter = Fraction(1, 4)
    ok = bern == {Fraction(0): Fraction(1, 6), quarter: Fraction(2, 3), Fraction(1): Fraction(1, 6)}
    ok = ok and signed == {Fraction(0): quarter, quarter: Fraction(2, 3), Fraction(1): Fraction(1, 12)}
    return ok, "d=2 pushforwards"


@check("tensor", "tails are monotone and below the base tail at sqrt(t)")
def _tail_chain(ctx: VerifyContext) -> Tuple[bool, str]:
    grid = default_t_grid()
    base = base_overlap_pmf(make_prior("bernoulli", p=30, k=5))
    violations = 0
    for kind in ("bernoulli", "bernoulli-rademacher"):
        for d in (2, 3):
            lifted = lifted_overlap_pmf(make_prior(kind, p=30, k=5, d=d))
            tails = [lifted.tail(t) for t in grid]
            violations += sum(1 for x, y in zip(tails, tails[1:]) if y > x)
            violations += sum(1 for t, tail in zip(grid, tails) if tail > base.tail(sqrt(t)) + 1e-15)
    return violations == 0, f"{violations} violations"


@check("tensor", "orthogonal rate function is 1")
def _orthogonal_rate(ctx: VerifyContext) -> Tuple[bool, str]:
    rows = rate_function(make_prior("orthogonal", m=16))
    bad = [r.t for r in rows if r.t > 0 and (abs(r.rate - 1.0) > 1e-12 or r.margin < -1e-12)]
    return not bad and rows[0].margin >= 0, f"{len(bad)} bad grid points"


# channel --------------------------------------------------------------------

@check("channel", "gram matrix has unit diagonal and is PSD")
def _gram_properties(ctx: VerifyContext) -> Tuple[bool, str]:
    problems = []
    for prior in (make_prior("bernoulli", p=6, k=2, d=2), make_prior("bernoulli-rademacher", p=4, k=2, d=3)):
        gram = ctx.gram_under_test(prior)
        if not np.array_equal(np.diag(gram), np.ones(gram.shape[0])):
            problems.append(f"{prior.label}: diagonal")
        if np.abs(gram).max() > 1.0 or not np.array_equal(gram, gram.T):
            problems.append(f"{prior.label}: entries")
        if np.linalg.eigvalsh(gram).min() < -1e-8:
            problems.append(f"{prior.label}: eigenvalues")
    jitter = gram_matrix(make_prior("bernoulli", p=4, k=2, d=1)).jitter
    if jitter > 1e-8:
        problems.append(f"jitter {jitter:g}")
    return not problems, "; ".join(problems) or "ok"


@check("channel", "log partition examples")
def _log_partition(ctx: VerifyContext) -> Tuple[bool, str]:
    two = log_partition(ProjectionObservation(u=np.array([1.0, 0.0]), true_index=0, lam=1.0))
    swapped = log_partition(ProjectionObservation(u=np.array([0.0, 1.0]), true_index=1, lam=1.0))
    zero = log_partition(ProjectionObservation(u=np.array([3.0, -1.0, 2.0]), true_index=0, lam=0.0))
    single = log_partition(ProjectionObservation(u=np.array([1.5]), true_index=0, lam=4.0))
    huge = log_partition(ProjectionObservation(u=np.array([1e3, -1e3]), true_index=0, lam=1e6))
    ok = abs(two - 0.120114) < 1e-6 and two == swapped and zero == 0.0
    ok = ok and abs(single - 1.0) < 1e-12 and np.isfinite(huge)
    return ok, f"log Z = {two:.6f}"


@check("channel", "projection noise has covariance G")
def _projection_law(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("bernoulli", p=5, k=2, d=2)
    instance = ctx.instance(prior, 4.0)
    streams = ctx.streams("projection-law")
    n = 4000
    observations = [sample_projections(instance, streams.generator(i)) for i in range(n)]
    noise = np.stack([obs.u - 2.0 * instance.backend.signal_row(obs.true_index) for obs in observations])
    gram = instance.gram
    cov = noise.T @ noise / n
    tolerance = N_SIGMA * np.sqrt((1.0 + gram ** 2) / n) + 1e-12
    mean_ok = np.all(np.abs(noise.mean(axis=0)) <= N_SIGMA / sqrt(n))
    cov_ok = np.all(np.abs(cov - gram) <= tolerance)
    return bool(mean_ok and cov_ok), f"max |cov - G| = {np.abs(cov - gram).max():.4f}"


@check("channel", "dense observation projects onto the same u")
def _dense_pipeline(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("bernoulli", p=4, k=2, d=2)
    instance = ctx.instance(prior, 9.0, gram_cap=1)
    worst = 0.0
    for i in range(20):
        direct = sample_projections(instance, ctx.streams("dense-pipeline").generator(i))
        dense = project_dense(instance, sample_dense(instance, ctx.streams("dense-pipeline").generator(i)))
        if direct.true_index != dense.true_index:
            return False, f"trial {i}: planted index differs"
        worst = max(worst, float(np.max(np.abs(direct.u - dense.u))))

    null = sample_dense(ctx.instance(make_prior("bernoulli", p=100, k=2, d=2), 0.0), ctx.rng("dense-null"))
    n = null.y.size
    mean, var = float(null.y.mean()), float(null.y.var(ddof=1))
    moments_ok = abs(mean) <= N_SIGMA / sqrt(n) and abs(var - 1.0) <= N_SIGMA * sqrt(2.0 / n)
    return worst <= 1e-10 and moments_ok, f"max deviation {worst:.3g}, null mean {mean:.4f}, variance {var:.4f}"


@check("channel", "partition function has mean 1 under the null")
def _null_partition(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("orthogonal", m=8)
    instance = ctx.instance(prior, 1.0)
    streams = ctx.streams("null-partition")
    n = 4000
    z = np.array([exp(log_partition(null_projections(instance, streams.generator(i)))) for i in range(n)])
    estimate = median_of_means(z, n_groups=10)
    tolerance = 6.0 * sqrt(chi_square_exact(prior, 1.0).value / n)
    return abs(estimate - 1.0) <= tolerance, f"median of means {estimate:.4f} (tolerance {tolerance:.4f})"


# estimator ------------------------------------------------------------------

@check("estimator", "posterior examples")
def _posterior_examples(ctx: VerifyContext) -> Tuple[bool, str]:
    w = posterior_weights(ProjectionObservation(u=np.array([1.0, 0.0]), true_index=0, lam=1.0))
    flat = posterior_weights(ProjectionObservation(u=np.array([0.3, -2.0, 5.0]), true_index=0, lam=0.0))
    tied = posterior_weights(ProjectionObservation(u=np.full(4, 1.7), true_index=0, lam=9.0))
    ok = np.allclose(w, [exp(1) / (1 + exp(1)), 1 / (1 + exp(1))], atol=1e-12)
    ok = ok and np.allclose(flat, 1 / 3) and np.allclose(tied, 0.25)
    ok = ok and map_estimate(ProjectionObservation(u=np.array([3.0, 1.0, 2.0]), true_index=0, lam=1.0)) == 0
    ok = ok and map_estimate(ProjectionObservation(u=np.array([2.0, 2.0, 0.0]), true_index=0, lam=1.0)) == 0

    eye = np.eye(5)
    uniform = posterior_statistics(np.full(5, 0.2), eye, 3)
    point = posterior_statistics(np.eye(5)[3], eye, 3)
    ok = ok and abs(uniform.sq_error - 0.8) < 1e-12 and point.sq_error == 0.0
    return bool(ok), f"weights {np.round(w, 4).tolist()}"


@check("estimator", "gram identity matches dense squared error")
def _gram_identity(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("bernoulli", p=4, k=2, d=2)
    instance = ctx.instance(prior, 2.0)
    gram = ctx.gram_under_test(prior)
    tensors = np.stack([
        materialize_tensor(TensorSignal(base=x, order=prior.d), 10 ** 4) for x in enumerate_support(prior)
    ])
    streams = ctx.streams("gram-identity")
    worst = 0.0
    for i in range(20):
        obs = sample_dense(instance, streams.generator(i))
        weights = posterior_weights(project_dense(instance, obs))
        summary = posterior_statistics(weights, gram, obs.true_index)
        dense = float(np.sum((tensors[obs.true_index] - weights @ tensors) ** 2))
        worst = max(worst, abs(dense - summary.sq_error))
    return worst <= 1e-8, f"max deviation {worst:.3g}"


@check("estimator", "MMSE closed forms")
def _mmse_closed_forms(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("orthogonal", m=8)
    null = mmse_monte_carlo(ctx.instance(prior, 0.0), 200, ctx.streams("mmse-null"), ctx.executor)
    loud = mmse_monte_carlo(
        ctx.instance(make_prior("orthogonal", m=16), 200.0 * log(16)), 500, ctx.streams("mmse-loud"), ctx.executor,
    )
    pair = mmse_monte_carlo(ctx.instance(make_prior("orthogonal", m=2), 4.0), 4000,
                            ctx.streams("mmse-pair"), ctx.executor)
    oracle = orthogonal2_mmse(4.0)
    ok = abs(null.value - 7 / 8) <= 1e-12 and loud.value <= 0.01 and _within(pair.value, pair.standard_error, oracle)
    return ok, f"null {null.value:.6f}, loud {loud.value:.2e}, pair {pair.value:.4f} vs {oracle:.4f}"


@check("estimator", "MMSE is nonincreasing in beta")
def _mmse_monotone(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("orthogonal", m=16)
    betas = parse_grid("0:2:0.25")
    sim = simulate_beta_grid(ctx.instance(prior), [lambda_for_beta(prior, b) for b in betas], 2000,
                             ctx.streams("mmse-monotone"), ctx.executor)
    steps, step_se = mean_and_se(np.diff(sim.sq_error, axis=1))
    worst = float(np.max(steps - N_SIGMA * step_se))
    return worst <= 1e-12, f"largest increase beyond tolerance {worst:.3g}"


@check("estimator", "posterior mean is no worse than MAP")
def _bayes_vs_map(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("orthogonal", m=4)
    cmp = map_mse_monte_carlo(ctx.instance(prior, 2.0), 4000, ctx.streams("bayes-map"), ctx.executor)
    loud = map_mse_monte_carlo(
        ctx.instance(make_prior("orthogonal", m=16), 20.0 * log(16)), 500, ctx.streams("map-loud"), ctx.executor,
    )
    ok = cmp.difference >= -N_SIGMA * cmp.difference_se and loud.map_accuracy >= 0.99
    return ok, f"map - bayes = {cmp.difference:.4f} ± {cmp.difference_se:.4f}, loud accuracy {loud.map_accuracy:.3f}"


# divergence -----------------------------------------------------------------

@check("divergence", "KL closed forms")
def _kl_closed_forms(ctx: VerifyContext) -> Tuple[bool, str]:
    zero = kl_monte_carlo(ctx.instance(make_prior("bernoulli", p=5, k=2, d=2), 0.0), 1000,
                          ctx.streams("kl-zero"), ctx.executor)
    single = kl_monte_carlo(ctx.instance(make_prior("bernoulli", p=3, k=3), 4.0), 2000,
                            ctx.streams("kl-single"), ctx.executor)
    pair = kl_monte_carlo(ctx.instance(make_prior("orthogonal", m=2), 4.0), 4000,
                          ctx.streams("kl-pair"), ctx.executor)
    oracle = orthogonal2_kl(4.0)
    ok = zero.value == 0.0 and _within(single.value, single.standard_error, 2.0)
    ok = ok and _within(pair.value, pair.standard_error, oracle)
    return ok, f"single {single.value:.4f}, pair {pair.value:.4f} vs {oracle:.4f}"


@check("divergence", "mutual information identity")
def _mutual_information(ctx: VerifyContext) -> Tuple[bool, str]:
    cases = (
        (make_prior("orthogonal", m=8), 2.0 * log(8)),
        (make_prior("bernoulli", p=6, k=2, d=2), 4.0),
        (make_prior("bernoulli-rademacher", p=5, k=2, d=3), 3.0),
        (make_prior("bernoulli", p=3, k=3), 5.0),
        (make_prior("orthogonal", m=8), 0.0),
    )
    failures = []
    for prior, lam in cases:
        result = mutual_information_check(ctx.instance(prior, lam), 2000, ctx.streams(f"mi/{prior.label}"), ctx.executor)
        if not result.passes(N_SIGMA):
            failures.append(f"{prior.label}@{lam:g}: {result.residual:.4f} ± {result.residual_se:.4f}")
        if prior.k == prior.p and abs(result.i_direct) > 1e-12:
            failures.append(f"{prior.label}: I = {result.i_direct:.3g}")
    return not failures, "; ".join(failures) or f"{len(cases)} instances"


@check("divergence", "KL exceeds lambda/2 - log M")
def _kl_lower_bound(ctx: VerifyContext) -> Tuple[bool, str]:
    log_m = log(16)
    est = kl_monte_carlo(ctx.instance(make_prior("orthogonal", m=16), 4.0 * log_m), 2000,
                         ctx.streams("kl-lower"), ctx.executor)
    return est.value >= log_m - N_SIGMA * est.standard_error, f"KL {est.value:.4f} vs {log_m:.4f}"


@check("divergence", "binary divergence examples")
def _binary(ctx: VerifyContext) -> Tuple[bool, str]:
    ok = binary_divergence(0.3, 0.3) == 0.0
    ok = ok and abs(binary_divergence(1.0, 0.25) - log(4)) < 1e-12
    ok = ok and abs(binary_divergence(0.9, 0.1) - 0.8 * log(9)) < 1e-12
    return ok, "d(0.9 || 0.1) = 0.8 log 9"


@check("divergence", "chi-square exact values")
def _chi_square(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("bernoulli", p=4, k=2, d=2)
    value = chi_square_exact(prior, 1.0).value
    expected = 1 / 6 + (4 / 6) * exp(0.25) + (1 / 6) * exp(1.0) - 1.0
    ortho = chi_square_exact(make_prior("orthogonal", m=8), 3.0).value
    ladder = [chi_square_exact(prior, lam).log_moment for lam in (0.0, 0.5, 1.0, 5.0, 50.0, 800.0)]
    mc_prior = make_prior("bernoulli", p=6, k=2, d=2)
    mc = chi_square_monte_carlo(mc_prior, 1.0, 4000, ctx.streams("chi-square"), ctx.executor)
    ok = abs(value - expected) < 1e-12 and abs(ortho - (exp(3.0) - 1.0) / 8) < 1e-12
    ok = ok and chi_square_exact(prior, 0.0).value == 0.0
    ok = ok and all(b >= a for a, b in zip(ladder, ladder[1:]))
    ok = ok and _within(mc.value, mc.standard_error, chi_square_exact(mc_prior, 1.0).value)
    return ok, f"chi2 = {value:.4f}, pair sampling {mc.value:.4f} ± {mc.standard_error:.4f}"


@check("divergence", "normalized KL is nonnegative, increasing, 1/2-Lipschitz and convex")
def _kl_shape(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("orthogonal", m=16)
    betas = parse_grid("0:2:0.25")
    lam_n = 2.0 * log_cardinality(prior)
    sim = simulate_beta_grid(ctx.instance(prior), [lambda_for_beta(prior, b) for b in betas], 2000,
                             ctx.streams("kl-shape"), ctx.executor)
    curve = sim.log_z / lam_n
    level, level_se = mean_and_se(curve)
    step, step_se = mean_and_se(np.diff(curve, axis=1))
    bend, bend_se = mean_and_se(np.diff(curve, n=2, axis=1))
    problems = []
    if np.any(level < -N_SIGMA * level_se - 1e-12):
        problems.append("negative")
    if np.any(step < -N_SIGMA * step_se - 1e-12):
        problems.append("decreasing")
    if np.any(step > 0.5 * 0.25 + N_SIGMA * step_se + 1e-12):
        problems.append("steeper than 1/2")
    if np.any(bend < -N_SIGMA * bend_se - 1e-12):
        problems.append("concave")
    return not problems, ", ".join(problems) or "ok"


@check("divergence", "I-MMSE derivative matches (1 - MMSE)/2")
def _immse(ctx: VerifyContext) -> Tuple[bool, str]:
    prior = make_prior("orthogonal", m=16)
    betas = parse_grid("0:2:0.125")
    rows = immse_curve_check(prior, betas, 3000, ctx.streams("immse"), ctx.executor)
    h = betas[1] - betas[0]
    lam_n = 2.0 * log_cardinality(prior)
    sim = simulate_beta_grid(ctx.instance(prior), [lambda_for_beta(prior, b) for b in betas], 3000,
                             ctx.streams("immse"), ctx.executor)
    per_trial = (sim.log_z[:, 2:] - sim.log_z[:, :-2]) / (2.0 * h * lam_n) + 0.5 * sim.sq_error[:, 1:-1]
    _, residual_se = mean_and_se(per_trial)
    residuals = np.array([r.residual for r in rows[1:-1]])
    worst = float(np.max(np.abs(residuals) - N_SIGMA * residual_se))
    ok = rows[0].kl_normalized == 0.0 and worst <= 0.05
    return ok, f"max |residual| {np.max(np.abs(residuals)):.4f}"


# secondmoment ---------------------------------------------------------------

@check("secondmoment", "truncation event probability")
def _omega(ctx: VerifyContext) -> Tuple[bool, str]:
    ladder = [omega_probability(lam) for lam in (0.5, 1.0, 16.0, 100.0, 1e4)]
    ok = abs(omega_probability(16.0) - (2.0 * ndtr(2.0) - 1.0)) < 1e-12
    ok = ok and abs(omega_probability(1.0) - (2.0 * ndtr(1.0) - 1.0)) < 1e-12
    ok = ok and all(b > a for a, b in zip(ladder, ladder[1:])) and ladder[-1] < 1.0 + 1e-15
    lam_n = critical_lambda(make_prior("orthogonal", m=2000))
    ok = ok and omega_probability(lam_n) > 0.95
    return ok, f"P[Omega](16) = {omega_probability(16.0):.5f}"


@check("secondmoment", "bivariate rectangle examples")
def _bvn(ctx: VerifyContext) -> Tuple[bool, str]:
    quadrant = bvn_rectangle((0.0, 0.0), [[1.0, 0.0], [0.0, 1.0]], ((-inf, 0.0), (-inf, 0.0)))
    line = bvn_rectangle((0.0, 0.0), [[1.0, 1.0], [1.0, 1.0]], ((0.0, 1.0), (0.0, 1.0)))
    orthant = bvn_rectangle((0.0, 0.0), [[1.0, 0.5], [0.5, 1.0]], ((0.0, inf), (0.0, inf)))
    ok = abs(quadrant - 0.25) < 1e-9 and abs(line - (ndtr(1.0) - 0.5)) < 1e-9 and abs(orthant - 1 / 3) < 1e-9
    return ok, f"{quadrant:.10f}, {line:.10f}, {orthant:.10f}"


@check("secondmoment", "truncated moment examples and bounds")
def _m_n(ctx: VerifyContext) -> Tuple[bool, str]:
    ok = abs(m_n(0.0, 16.0) - erf(sqrt(2.0)) ** 2) < 1e-9 and m_n(-1.0, 16.0) <= 1.2e-7
    rhos = [-1.0, -0.5, 0.0, 0.2, 0.4, 0.6, 0.8, 0.95, 1.0]
    for lam in (16.0, 100.0, 1e3):
        logs = [log_m_n(rho, lam) for rho in rhos]
        ok = ok and all(value <= lam * rho + 1e-9 for rho, value in zip(rhos, logs))
        positive = [value for rho, value in zip(rhos, logs) if rho >= 0]
        ok = ok and all(b >= a - 1e-9 for a, b in zip(positive, positive[1:]))
        ok = ok and all(log_m_n(rho, lam) <= sum_projection_bound(rho, lam) + 1e-9 for rho in rhos)
    return ok, f"m(0, 16) = {m_n(0.0, 16.0):.5f}"


@check("secondmoment", "tilted value matches direct sampling")
def _tilting(ctx: VerifyContext) -> Tuple[bool, str]:
    failures = []
    for lam in (1.0, 2.0):
        for rho in (-0.5, 0.0, 0.5, 0.9):
            est = m_n_monte_carlo(rho, lam, 200_000, ctx.rng(f"tilting/{rho}/{lam}"))
            if not _within(est.value, est.standard_error, m_n(rho, lam)):
                failures.append(f"rho={rho:g}, lambda={lam:g}")
    return not failures, "; ".join(failures) or "8 grid points"


@check("secondmoment", "truncated moment margins")
def _prop5(ctx: VerifyContext) -> Tuple[bool, str]:
    worst = -inf
    bad_negative = 0
    for lam in ctx.config.lambda_grid:
        for row in prop5_margin(ctx.config.rho_grid, lam):
            if row.rho <= 0 and row.margin > 1e-12:
                bad_negative += 1
            worst = max(worst, row.scaled_margin)
    ok = bad_negative == 0 and worst <= PROP5_CONSTANT
    return ok, f"max scaled margin {worst:.4f} (constant {PROP5_CONSTANT:g})"


@check("secondmoment", "conditional chi-square bound")
def _theorem4(ctx: VerifyContext) -> Tuple[bool, str]:
    orthogonal_rhs = theorem4_rhs(make_prior("orthogonal", m=64))
    prior = make_prior("bernoulli", p=200, k=4, d=2)
    lam = critical_lambda(prior)
    bound = conditional_chi_square_bound(prior, lam)
    limit = theorem4_finite_size_bound(prior, lam)
    ortho = make_prior("orthogonal", m=8)
    two_atom = conditional_chi_square_bound(ortho, 3.0).expected_m
    expected = (7 / 8) * m_n(0.0, 3.0) + (1 / 8) * m_n(1.0, 3.0)
    ok = orthogonal_rhs == 0.0 and bound.corrected_normalized <= limit + 1e-9
    ok = ok and abs(two_atom - expected) <= 1e-9 * expected
    return ok, f"(1/lambda) log(E[m]/P) = {bound.corrected_normalized:.4f} <= {limit:.4f}"


# harness --------------------------------------------------------------------

@check("harness", "sweep output is independent of thread count")
def _determinism(ctx: VerifyContext) -> Tuple[bool, str]:
    config = SweepConfig(prior="orthogonal", m=16, beta_grid="0:2:0.5", trials=300, seed=ctx.config.seed)
    serial = records_frame(sweep_records(config))
    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded = records_frame(sweep_records(config, pool))
    first = serial.iloc[0]
    ok = serial.equals(threaded) and first["kl_hat"] == 0.0 and abs(first["mmse_hat"] - 15 / 16) < 1e-12
    return bool(ok), f"{len(serial)} rows"


@check("harness", "transition width interpolation")
def _width(ctx: VerifyContext) -> Tuple[bool, str]:
    width = transition_width([0.0, 1.0, 2.0, 3.0, 4.0], [1.0, 0.8, 0.5, 0.2, 0.0])
    never = transition_width([0.0, 1.0], [1.0, 0.9])
    return abs(width - 5 / 3) < 1e-12 and never == inf, f"width {width:.4f}"


def run_checks(config: SweepConfig, executor: Optional[Executor] = None) -> List[CheckResult]:
    """Runs every registered check; an exception fails only its own check."""
    ctx = VerifyContext(config, executor)
    if ctx.fault:
        VerificationEventLogger.fault_injected(ctx.fault)

    results = []
    for module, name, fn in CHECKS:
        try:
            passed, detail = fn(ctx)
        except Exception as e:
            logger.exception(f"Check {module}/{name} raised")
            passed, detail = False, f"{type(e).__name__}: {e}"
        passed = bool(passed)
        if passed:
            VerificationEventLogger.check_passed(f"{module}/{name}", detail)
        else:
            VerificationEventLogger.check_failed(f"{module}/{name}", detail)
        results.append(CheckResult(module=module, name=name, passed=passed, detail=detail))
    return results


def results_frame(results: List[CheckResult]) -> pd.DataFrame:
    return pd.DataFrame({
        "module": [r.module for r in results],
        "check": [r.name for r in results],
        "status": ["PASS" if r.passed else "FAIL" for r in results],
        "detail": [r.detail for r in results],
    })


def run_verify(config: SweepConfig, executor: Optional[Executor] = None) -> int:
    """Prints the pass/fail table; exit code 0 iff every check passes."""
    results = run_checks(config, executor)
    frame = results_frame(results)
    print(frame.to_string(index=False))
    if config.out is not None:
        write_csv(frame, config.out)

    failed = sum(1 for r in results if not r.passed)
    if failed:
        logger.error(f"{failed} of {len(results)} checks failed")
        return EXIT_FAILURE
    logger.info(f"All {len(results)} checks passed")
    return EXIT_OK
