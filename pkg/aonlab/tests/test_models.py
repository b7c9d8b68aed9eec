"""
Validation tests for the pydantic models.
"""

from fractions import Fraction

import pytest
from pydantic import ValidationError

from aonlab.models.config import SweepConfig, SweepRecord, parse_grid
from aonlab.models.overlap import OverlapPMF
from aonlab.models.prior import DiscretePrior, PriorKind
from aonlab.models.signal import SignalVector, TensorSignal


class TestSignalVector:
    """Tests for the sparse unit vector."""

    def test_entries_have_equal_magnitude(self):
        """Every nonzero entry is ±1/sqrt(k) and the norm is 1."""
        x = SignalVector(dim=6, indices=(1, 4, 5), signs=(1, -1, 1))

        assert x.k == 3
        assert x.norm_sq() == pytest.approx(1.0, abs=1e-12)
        assert x.to_dense()[4] == pytest.approx(-1 / 3 ** 0.5)
        assert x.to_dense()[0] == 0.0

    def test_unsorted_indices_rejected(self):
        """Indices must be strictly increasing."""
        with pytest.raises(ValidationError):
            SignalVector(dim=6, indices=(4, 1), signs=(1, 1))

    def test_index_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            SignalVector(dim=3, indices=(0, 3), signs=(1, 1))

    def test_bad_sign_rejected(self):
        with pytest.raises(ValidationError):
            SignalVector(dim=3, indices=(0, 1), signs=(1, 0))

    def test_tensor_ambient_dimension(self):
        x = SignalVector(dim=5, indices=(0,), signs=(1,))
        assert TensorSignal(base=x, order=3).ambient_dim == 125


class TestDiscretePrior:
    """Tests for prior parameter validation."""

    def test_k_above_p_rejected(self):
        with pytest.raises(ValidationError):
            DiscretePrior(kind=PriorKind.BERNOULLI, p=3, k=4)

    def test_orthogonal_needs_two_signals(self):
        """An orthogonal prior on a single vector is rejected; M = 1 is Bernoulli(p = k)."""
        with pytest.raises(ValidationError):
            DiscretePrior(kind=PriorKind.ORTHOGONAL, p=1, k=1)

    def test_sign_quotient_only_for_even_signed_orders(self):
        signed = DiscretePrior(kind=PriorKind.BERNOULLI_RADEMACHER, p=5, k=2, d=2)
        odd = DiscretePrior(kind=PriorKind.BERNOULLI_RADEMACHER, p=5, k=2, d=3)
        plain = DiscretePrior(kind=PriorKind.BERNOULLI, p=5, k=2, d=2)

        assert signed.sign_quotient
        assert not odd.sign_quotient
        assert not plain.sign_quotient


class TestOverlapPMF:
    """Tests for the overlap law container."""

    def test_probabilities_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            OverlapPMF(values=(Fraction(0), Fraction(1)), probabilities=(Fraction(1, 2), Fraction(1, 3)))

    def test_tail_counts_atoms_at_threshold(self):
        """P[rho >= t] includes an atom sitting exactly at t."""
        pmf = OverlapPMF(
            values=(Fraction(0), Fraction(1, 2), Fraction(1)),
            probabilities=(Fraction(1, 6), Fraction(2, 3), Fraction(1, 6)),
        )

        assert pmf.tail(0.5) == pytest.approx(5 / 6)
        assert pmf.tail(0.51) == pytest.approx(1 / 6)
        assert pmf.log_tail(0.0) == 0.0
        assert pmf.mean() == pytest.approx(0.5)

    def test_total_variation_exact(self):
        a = OverlapPMF(values=(Fraction(0), Fraction(1)), probabilities=(Fraction(1, 2), Fraction(1, 2)))
        b = OverlapPMF(values=(Fraction(0), Fraction(1)), probabilities=(Fraction(1, 4), Fraction(3, 4)))

        assert a.total_variation(b) == 0.25
        assert a.total_variation(a) == 0.0


class TestParseGrid:
    """Tests for the a:b:step grid syntax."""

    def test_inclusive_end(self):
        grid = parse_grid("0:2:0.125")

        assert len(grid) == 17
        assert grid[-1] == 2.0
        assert grid[3] == 3 * 0.125

    def test_end_within_tolerance(self):
        assert parse_grid("0:0.3:0.1")[-1] == pytest.approx(0.3)

    def test_list_syntax(self):
        assert parse_grid("100, 1000,1e4") == [100.0, 1000.0, 1e4]

    @pytest.mark.parametrize("text", ["", "0:1", "0:1:0", "1:0:0.1"])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            parse_grid(text)


class TestSweepConfig:
    """Tests for the effective run configuration."""

    def test_defaults(self):
        config = SweepConfig()

        assert config.prior == PriorKind.ORTHOGONAL
        assert config.trials == 1000
        assert config.seed == 2024
        assert config.beta_grid[-1] == 2.0

    def test_grid_strings_are_parsed(self):
        config = SweepConfig(beta_grid="0:1:0.5", lambda_grid="10,100", rho_grid="-1,0,1")

        assert config.beta_grid == [0.0, 0.5, 1.0]
        assert config.lambda_grid == [10.0, 100.0]

    def test_sparse_prior_needs_p_and_k(self):
        with pytest.raises(ValidationError):
            SweepConfig(prior="bernoulli", p=10)

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            SweepConfig(tirals=10)

    def test_descending_beta_grid_rejected(self):
        with pytest.raises(ValidationError):
            SweepConfig(beta_grid=[1.0, 0.5])

    def test_unknown_fault_rejected(self):
        with pytest.raises(ValidationError):
            SweepConfig(inject_fault="flip-signs")

    def test_record_serializes_lambda_alias(self):
        record = SweepRecord(
            beta=0.5, lam=2.0, mmse_hat=0.5, mmse_se=0.01, kl_hat=0.1, kl_se=0.01,
            kl_normalized=0.05, prop1_target=0.0, n_trials=10, seed=1,
        )

        dumped = record.model_dump(by_alias=True)
        assert "lambda" in dumped
        assert "lam" not in dumped
