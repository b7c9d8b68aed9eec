"""
Tests for prior construction, sampling, enumeration and overlap laws.
"""

from collections import Counter
from fractions import Fraction
from math import comb, fsum, log, pi

import numpy as np
import pytest

from aonlab.models.prior import PriorKind
from aonlab.services.prior_service import (
    overlap_spread_profile,
    base_overlap_pmf,
    cardinality,
    enumerate_support,
    log_cardinality,
    make_prior,
    max_projection_moment,
    prior_mean_norm_sq,
    sample_signal,
)
from aonlab.utils.error_handlers import CardinalityExceeded, DomainError


class TestMakePrior:
    """Tests for prior construction."""

    def test_orthogonal_stored_as_basis(self):
        prior = make_prior("orthogonal", m=8, d=2)

        assert prior.kind == PriorKind.ORTHOGONAL
        assert (prior.p, prior.k, prior.d) == (8, 1, 2)

    @pytest.mark.parametrize("kwargs", [
        {"kind": "bernoulli", "p": 3, "k": 4},
        {"kind": "bernoulli", "p": 3, "k": 0},
        {"kind": "orthogonal", "m": 1},
        {"kind": "bernoulli", "p": 3, "k": 2, "d": 0},
        {"kind": "bernoulli", "p": 3},
        {"kind": "gaussian", "p": 3, "k": 1},
    ])
    def test_invalid_parameters(self, kwargs):
        """Every invalid parameter combination is a DomainError."""
        with pytest.raises(DomainError):
            make_prior(**kwargs)

    def test_single_signal_prior(self):
        """Bernoulli with k = p has exactly one signal and log M = 0."""
        prior = make_prior("bernoulli", p=3, k=3)

        assert cardinality(prior) == 1
        assert log_cardinality(prior) == 0.0


class TestEnumeration:
    """Tests for support enumeration and cardinality."""

    def test_every_vector_has_unit_norm(self):
        for prior in (make_prior("bernoulli", p=6, k=2), make_prior("bernoulli-rademacher", p=5, k=3)):
            for x in enumerate_support(prior):
                assert x.norm_sq() == pytest.approx(1.0, abs=1e-12)

    def test_signed_count_and_order(self):
        """Index sets ascend; within a set the all-positive pattern comes first."""
        support = enumerate_support(make_prior("bernoulli-rademacher", p=4, k=2))

        assert len(support) == comb(4, 2) * 4
        assert support[0].indices == (0, 1)
        assert support[0].signs == (1, 1)
        assert support[1].signs == (1, -1)
        assert support[4].indices == (0, 2)

    def test_cap_enforced(self):
        with pytest.raises(CardinalityExceeded):
            enumerate_support(make_prior("bernoulli", p=30, k=10), cap=1000)

    @pytest.mark.parametrize("kind,p,k,d", [
        ("bernoulli", 10, 3, 1),
        ("bernoulli-rademacher", 6, 2, 1),
        ("bernoulli-rademacher", 6, 2, 2),
        ("bernoulli-rademacher", 6, 2, 3),
    ])
    def test_log_cardinality_matches_count(self, kind, p, k, d):
        """log M uses log-gamma and halves the count under the sign quotient."""
        prior = make_prior(kind, p=p, k=k, d=d)
        count = len(enumerate_support(prior))
        if prior.sign_quotient:
            count //= 2

        assert cardinality(prior) == count
        assert log_cardinality(prior) == pytest.approx(log(count), abs=1e-12)

    def test_log_cardinality_without_enumeration(self):
        """Large supports are counted, never enumerated."""
        prior = make_prior("bernoulli", p=10 ** 6, k=50)
        assert log_cardinality(prior) == pytest.approx(log(comb(10 ** 6, 50)), rel=1e-9)


class TestSampling:
    """Tests for uniform sampling from the support."""

    def test_deterministic_given_stream(self, streams):
        prior = make_prior("bernoulli-rademacher", p=20, k=4)

        a = sample_signal(prior, streams.generator(3))
        b = sample_signal(prior, streams.generator(3))
        assert a == b

    def test_support_uniformity(self, rng):
        """Each of the 6 Bernoulli(4, 2) supports appears about 1/6 of the time."""
        prior = make_prior("bernoulli", p=4, k=2)
        n = 12000
        counts = Counter(sample_signal(prior, rng).indices for _ in range(n))

        assert len(counts) == 6
        se = (1 / 6 * 5 / 6 / n) ** 0.5
        for count in counts.values():
            assert abs(count / n - 1 / 6) <= 4 * se

    def test_signs_are_fair(self, rng):
        prior = make_prior("bernoulli-rademacher", p=10, k=5)
        signs = np.concatenate([sample_signal(prior, rng).signs for _ in range(2000)])

        assert abs(signs.mean()) <= 4 / np.sqrt(signs.size)


class TestBaseOverlap:
    """Tests for the exact law of <x, x'>."""

    def test_bernoulli_example(self):
        pmf = base_overlap_pmf(make_prior("bernoulli", p=4, k=2))

        assert pmf.exact
        assert pmf.as_dict() == {
            Fraction(0): Fraction(1, 6),
            Fraction(1, 2): Fraction(2, 3),
            Fraction(1): Fraction(1, 6),
        }

    def test_signed_example(self):
        pmf = base_overlap_pmf(make_prior("bernoulli-rademacher", p=4, k=2))

        assert pmf.as_dict() == {
            Fraction(-1): Fraction(1, 24),
            Fraction(-1, 2): Fraction(1, 3),
            Fraction(0): Fraction(1, 4),
            Fraction(1, 2): Fraction(1, 3),
            Fraction(1): Fraction(1, 24),
        }

    def test_orthogonal_law(self):
        pmf = base_overlap_pmf(make_prior("orthogonal", m=10))
        assert pmf.as_dict() == {Fraction(0): Fraction(9, 10), Fraction(1): Fraction(1, 10)}

    def test_signed_law_is_symmetric(self):
        law = base_overlap_pmf(make_prior("bernoulli-rademacher", p=9, k=4)).as_dict()
        for value, mass in law.items():
            assert law[-value] == mass

    def test_large_p_uses_log_masses(self):
        """Beyond the exact limit the law is float-valued with finite log masses."""
        pmf = base_overlap_pmf(make_prior("bernoulli", p=5000, k=30))

        assert not pmf.exact
        assert np.isfinite(pmf.log_probability_array()).all()
        assert pmf.log_tail(1.0) == pytest.approx(-log(comb(5000, 30)), rel=1e-7)

    @pytest.mark.parametrize("kind", ["bernoulli", "bernoulli-rademacher"])
    @pytest.mark.parametrize("p", [10_000, 100_000])
    def test_large_p_law_is_normalized(self, kind, p):
        pmf = base_overlap_pmf(make_prior(kind, p=p, k=10))
        signs = 2 ** 10 if kind == "bernoulli-rademacher" else 1

        assert fsum(pmf.probability_array()) == pytest.approx(1.0, abs=1e-12)
        assert pmf.log_tail(1.0) == pytest.approx(-log(comb(p, 10) * signs), rel=1e-9)

    def test_mean_norm_sq(self):
        assert prior_mean_norm_sq(make_prior("orthogonal", m=8, d=3)) == pytest.approx(1 / 8)
        assert prior_mean_norm_sq(make_prior("bernoulli-rademacher", p=6, k=2, d=1)) == pytest.approx(0.0)


class TestOverlapSpreadProfile:
    """Tests for the finite-size spread profile."""

    def test_profile_endpoints(self):
        prior = make_prior("orthogonal", m=16)
        rows = overlap_spread_profile(prior, [0.0, 0.5, 1.0])

        assert rows[0].normalized == 0.0
        assert rows[1].normalized == pytest.approx(-1.0)
        assert rows[2].normalized == pytest.approx(-1.0)

    def test_single_signal_rejected(self):
        with pytest.raises(DomainError):
            overlap_spread_profile(make_prior("bernoulli", p=3, k=3), [0.5])


class TestMaxProjection:
    """Tests for the E max <x_i, Z>^2 estimate."""

    def test_two_coordinates(self, streams):
        """E max(Z1^2, Z2^2) = 1 + 2/pi."""
        estimate = max_projection_moment(make_prior("orthogonal", m=2), 4000, streams.derive("max"))

        assert abs(estimate.value - (1 + 2 / pi)) <= 4 * estimate.standard_error
        assert estimate.reference == pytest.approx(2 * log(2) + 2)

    def test_below_union_bound_reference(self, streams):
        estimate = max_projection_moment(make_prior("bernoulli", p=8, k=2, d=2), 1000, streams.derive("max"))
        assert estimate.value <= estimate.reference

    def test_too_few_trials(self, streams):
        with pytest.raises(DomainError):
            max_projection_moment(make_prior("orthogonal", m=2), 999, streams)
