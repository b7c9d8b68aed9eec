"""
Tests for the Gaussian additive channel: Gram matrices, projection backends,
dense observations and the partition function.
"""

from math import exp, log

import numpy as np
import pytest

from aonlab.models.channel import ProjectionObservation
from aonlab.services.channel_service import (
    JITTER_LADDER,
    build_instance,
    factorize,
    gram_matrix,
    lambda_for_beta,
    log_partition,
    null_projections,
    project_dense,
    sample_dense,
    sample_projections,
)
from aonlab.services.projection_backends import ContractionBackend
from aonlab.services.prior_service import make_prior
from aonlab.utils.error_handlers import CardinalityExceeded, DomainError, FactorizationFailure
from aonlab.utils.stats import median_of_means


class TestGramMatrix:
    """Tests for G_ij = <x_i, x_j>^d."""

    @pytest.mark.parametrize("kind,p,k,d", [
        ("bernoulli", 6, 2, 2),
        ("bernoulli-rademacher", 4, 2, 3),
        ("bernoulli-rademacher", 4, 2, 2),
    ])
    def test_properties(self, kind, p, k, d):
        """Unit diagonal, entries in [-1, 1], symmetric and PSD."""
        gram = gram_matrix(make_prior(kind, p=p, k=k, d=d)).gram

        np.testing.assert_array_equal(np.diag(gram), np.ones(gram.shape[0]))
        assert np.abs(gram).max() <= 1.0
        np.testing.assert_array_equal(gram, gram.T)
        assert np.linalg.eigvalsh(gram).min() >= -1e-8

    def test_bernoulli_d1_entries(self):
        """Bernoulli(4, 2): supports sharing one coordinate have overlap 1/2."""
        gram = gram_matrix(make_prior("bernoulli", p=4, k=2)).gram

        # {0,1} vs {0,2}, {0,1} vs {2,3}
        assert gram[0, 1] == 0.5
        assert gram[0, 5] == 0.0

    def test_small_jitter_for_rank_deficient_gram(self):
        """Six supports in R^4 give a singular G; the factor needs at most 1e-8 jitter."""
        factorization = gram_matrix(make_prior("bernoulli", p=4, k=2, d=1))

        assert factorization.jitter <= 1e-8
        reconstructed = factorization.factor @ factorization.factor.T
        np.testing.assert_allclose(reconstructed, factorization.gram, atol=1e-7)

    def test_orthogonal_is_identity(self):
        factorization = gram_matrix(make_prior("orthogonal", m=5))
        np.testing.assert_array_equal(factorization.gram, np.eye(5))

    def test_cap_enforced(self):
        with pytest.raises(CardinalityExceeded):
            gram_matrix(make_prior("bernoulli", p=20, k=3), cap=100)

    def test_indefinite_matrix_fails(self):
        with pytest.raises(FactorizationFailure):
            factorize(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert JITTER_LADDER[-1] == 1e-6


class TestBuildInstance:
    """Tests for backend selection and caching."""

    def test_backend_choice(self):
        assert build_instance(make_prior("orthogonal", m=8)).backend.name == "identity"
        assert build_instance(make_prior("bernoulli", p=6, k=2, d=2)).backend.name == "gram"
        pair_sum = build_instance(make_prior("bernoulli", p=6, k=2, d=2), gram_cap=1)
        assert pair_sum.backend.name == "pair-sum"
        contraction = build_instance(make_prior("bernoulli", p=6, k=2, d=3), gram_cap=1)
        assert contraction.backend.name == "contraction"

    def test_no_backend_fits(self):
        with pytest.raises(CardinalityExceeded):
            build_instance(make_prior("bernoulli", p=50, k=3, d=3), gram_cap=10, ambient_cap=1000)

    def test_cached_instance_shares_backend(self):
        prior = make_prior("bernoulli", p=6, k=2, d=2)
        a = build_instance(prior, 1.0)
        b = build_instance(prior, 5.0)

        assert a.backend is b.backend
        assert (a.lam, b.lam) == (1.0, 5.0)

    def test_negative_lambda_rejected(self):
        with pytest.raises(DomainError):
            build_instance(make_prior("orthogonal", m=4), -1.0)

    def test_lambda_for_beta(self):
        prior = make_prior("orthogonal", m=16)

        assert lambda_for_beta(prior, 1.0) == pytest.approx(2 * log(16))
        assert lambda_for_beta(prior, 0.0) == 0.0
        with pytest.raises(DomainError):
            lambda_for_beta(prior, -0.1)


class TestProjections:
    """Tests for the projection samplers."""

    def test_planted_mean_and_noise_covariance(self, streams):
        """u - sqrt(lambda) G e_J is N(0, G)."""
        instance = build_instance(make_prior("bernoulli", p=5, k=2, d=2), 4.0)
        n = 4000
        observations = [sample_projections(instance, streams.generator(i)) for i in range(n)]
        noise = np.stack([obs.u - 2.0 * instance.gram[obs.true_index] for obs in observations])

        gram = instance.gram
        cov = noise.T @ noise / n
        assert np.all(np.abs(noise.mean(axis=0)) <= 4 / np.sqrt(n))
        assert np.all(np.abs(cov - gram) <= 4 * np.sqrt((1 + gram ** 2) / n) + 1e-12)

    def test_true_index_uniform(self, streams):
        instance = build_instance(make_prior("orthogonal", m=4), 1.0)
        n = 4000
        counts = np.bincount(
            [sample_projections(instance, streams.generator(i)).true_index for i in range(n)], minlength=4
        )

        assert np.all(np.abs(counts / n - 0.25) <= 4 * np.sqrt(0.25 * 0.75 / n))

    def test_null_projections_carry_lambda(self, rng):
        instance = build_instance(make_prior("orthogonal", m=4), 3.0)
        obs = null_projections(instance, rng)

        assert obs.lam == 3.0
        assert obs.u.shape == (4,)

    def test_contraction_matches_gram_in_law(self, streams):
        """Noise covariance of the contraction backend is G as well."""
        prior = make_prior("bernoulli-rademacher", p=4, k=2, d=3)
        gram = gram_matrix(prior).gram
        backend = build_instance(prior, gram_cap=1).backend
        n = 4000
        noise = np.stack([backend.noise(streams.generator(i)) for i in range(n)])

        cov = noise.T @ noise / n
        assert np.all(np.abs(cov - gram) <= 4 * np.sqrt((1 + gram ** 2) / n) + 1e-12)

    def test_quadratic_form_agrees_across_backends(self, rng):
        prior = make_prior("bernoulli", p=5, k=2, d=3)
        gram_backend = build_instance(prior).backend
        contraction = build_instance(prior, gram_cap=1).backend
        w = rng.dirichlet(np.ones(gram_backend.size))

        assert contraction.quadratic_form(w) == pytest.approx(gram_backend.quadratic_form(w), abs=1e-12)
        np.testing.assert_allclose(contraction.signal_row(3), gram_backend.signal_row(3), atol=1e-12)

    @pytest.mark.parametrize("kind", ["bernoulli", "bernoulli-rademacher"])
    def test_pair_sum_matches_contraction(self, kind, streams):
        """Same stream, same Z: both order-2 samplers give the same projections."""
        prior = make_prior(kind, p=7, k=3, d=2)
        pair_sum = build_instance(prior, gram_cap=1).backend
        contraction = ContractionBackend(pair_sum.support, 2)
        assert pair_sum.name == "pair-sum"

        for i in range(5):
            np.testing.assert_allclose(
                pair_sum.noise(streams.generator(i)), contraction.noise(streams.generator(i)), atol=1e-12
            )

    @pytest.mark.parametrize("kind", ["bernoulli", "bernoulli-rademacher"])
    def test_pair_sum_quadratic_form(self, kind, rng):
        prior = make_prior(kind, p=6, k=3, d=2)
        gram_backend = build_instance(prior).backend
        pair_sum = build_instance(prior, gram_cap=1).backend
        w = rng.standard_normal(gram_backend.size)

        assert pair_sum.quadratic_form(w) == pytest.approx(gram_backend.quadratic_form(w), rel=1e-10)
        np.testing.assert_allclose(pair_sum.signal_row(5), gram_backend.signal_row(5), atol=1e-12)
        assert pair_sum.gram is None

    def test_pair_sum_skips_negligible_weights(self, rng):
        """A concentrated posterior keeps its quadratic form."""
        prior = make_prior("bernoulli", p=8, k=3, d=2)
        gram_backend = build_instance(prior).backend
        pair_sum = build_instance(prior, gram_cap=1).backend
        scores = 60.0 * rng.standard_normal(gram_backend.size)
        w = np.exp(scores - scores.max())
        w /= w.sum()

        assert pair_sum.quadratic_form(w) == pytest.approx(gram_backend.quadratic_form(w), rel=1e-12)


class TestDenseObservation:
    """Tests for the full observation Y = sqrt(lambda) X + Z."""

    def test_projection_of_dense_equals_direct(self, streams):
        """With a tensor backend both paths see the same J and Z."""
        instance = build_instance(make_prior("bernoulli", p=4, k=2, d=2), 9.0, gram_cap=1)
        for i in range(10):
            direct = sample_projections(instance, streams.generator(i))
            dense = project_dense(instance, sample_dense(instance, streams.generator(i)))

            assert direct.true_index == dense.true_index
            np.testing.assert_allclose(direct.u, dense.u, atol=1e-10)

    def test_null_observation_is_standard_normal(self, rng):
        instance = build_instance(make_prior("bernoulli", p=100, k=2, d=2), 0.0)
        obs = sample_dense(instance, rng)

        n = obs.y.shape[0]
        assert n == 10_000
        # mean and variance of N(0, 1) within 5 standard errors
        assert abs(obs.y.mean()) <= 5.0 / np.sqrt(n)
        assert abs(obs.y.var(ddof=1) - 1.0) <= 5.0 * np.sqrt(2.0 / n)

    def test_dense_cap(self, rng):
        instance = build_instance(make_prior("bernoulli", p=30, k=2, d=2), 1.0)
        with pytest.raises(CardinalityExceeded):
            sample_dense(instance, rng, cap=100)


class TestLogPartition:
    """Tests for log Z(Y)."""

    def test_two_signal_example(self):
        obs = ProjectionObservation(u=np.array([1.0, 0.0]), true_index=0, lam=1.0)
        assert log_partition(obs) == pytest.approx(log((exp(0.5) + exp(-0.5)) / 2), abs=1e-12)
        assert log_partition(obs) == pytest.approx(0.120114, abs=1e-6)

    def test_zero_at_lambda_zero(self):
        obs = ProjectionObservation(u=np.array([3.0, -1.0, 2.0]), true_index=1, lam=0.0)
        assert log_partition(obs) == 0.0

    def test_single_signal(self):
        """M = 1: log Z = sqrt(lambda) u - lambda/2."""
        obs = ProjectionObservation(u=np.array([1.5]), true_index=0, lam=4.0)
        assert log_partition(obs) == pytest.approx(1.0)

    def test_permutation_invariant(self, rng):
        u = rng.standard_normal(10)
        perm = rng.permutation(10)
        a = log_partition(ProjectionObservation(u=u, true_index=0, lam=2.0))
        b = log_partition(ProjectionObservation(u=u[perm], true_index=0, lam=2.0))

        assert a == pytest.approx(b, abs=1e-12)

    def test_large_arguments_stay_finite(self):
        obs = ProjectionObservation(u=np.array([1e3, -1e3]), true_index=0, lam=1e6)
        assert np.isfinite(log_partition(obs))

    def test_null_mean_is_one(self, streams):
        """E_0 Z = 1, estimated by median of means."""
        instance = build_instance(make_prior("orthogonal", m=8), 1.0)
        n = 4000
        z = np.array([exp(log_partition(null_projections(instance, streams.generator(i)))) for i in range(n)])

        # chi-square of the orthogonal prior at lambda = 1 is (e - 1)/8
        assert median_of_means(z) == pytest.approx(1.0, abs=6 * np.sqrt((exp(1) - 1) / 8 / n))
