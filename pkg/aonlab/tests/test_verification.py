"""
Tests for the invariant suite behind `verify`.
"""

from math import log

import numpy as np
import pytest

from aonlab.models.config import SweepConfig
from aonlab.services import verification_service
from aonlab.services.channel_service import build_instance
from aonlab.services.estimator_service import mmse_monte_carlo
from aonlab.services.prior_service import make_prior
from aonlab.services.verification_service import (
    CHECKS,
    VerifyContext,
    orthogonal2_kl,
    orthogonal2_mmse,
    results_frame,
    run_checks,
    run_verify,
)
from aonlab.utils.error_handlers import EXIT_FAILURE, EXIT_OK


def _registered(module, name):
    for m, n, fn in CHECKS:
        if (m, n) == (module, name):
            return fn
    raise KeyError(f"{module}/{name}")


class TestRegistry:
    """Tests for check registration."""

    def test_every_module_has_checks(self):
        modules = {module for module, _, _ in CHECKS}
        assert modules == {"prior", "tensor", "channel", "estimator", "divergence", "secondmoment", "harness"}

    def test_names_are_unique(self):
        keys = [(module, name) for module, name, _ in CHECKS]
        assert len(keys) == len(set(keys))


class TestRunChecks:
    """Tests for running and reporting checks."""

    def test_exception_fails_only_its_check(self, monkeypatch):
        def broken(ctx):
            raise RuntimeError("boom")

        monkeypatch.setattr(verification_service, "CHECKS", [
            ("prior", "fine", lambda ctx: (True, "ok")),
            ("prior", "broken", broken),
        ])
        results = run_checks(SweepConfig())

        assert [r.passed for r in results] == [True, False]
        assert results[1].detail == "RuntimeError: boom"

    def test_results_frame(self, monkeypatch):
        monkeypatch.setattr(verification_service, "CHECKS", [
            ("tensor", "a", lambda ctx: (True, "ok")),
            ("tensor", "b", lambda ctx: (False, "off by one")),
        ])
        frame = results_frame(run_checks(SweepConfig()))

        assert list(frame.columns) == ["module", "check", "status", "detail"]
        assert list(frame["status"]) == ["PASS", "FAIL"]

    def test_run_verify_exit_codes(self, monkeypatch, tmp_path, capsys):
        monkeypatch.setattr(verification_service, "CHECKS", [("harness", "a", lambda ctx: (True, "ok"))])
        out = tmp_path / "verify.csv"
        assert run_verify(SweepConfig(out=out)) == EXIT_OK
        assert "PASS" in capsys.readouterr().out
        assert out.read_text().startswith("module,check,status,detail\n")

        monkeypatch.setattr(verification_service, "CHECKS", [("harness", "a", lambda ctx: (False, "no"))])
        assert run_verify(SweepConfig()) == EXIT_FAILURE


class TestFaultInjection:
    """The gram-diagonal fault must be caught by the checks that consume the Gram matrix."""

    def test_gram_under_test_perturbs_diagonal(self):
        prior = make_prior("bernoulli", p=4, k=2, d=2)
        clean = VerifyContext(SweepConfig()).gram_under_test(prior)
        faulty = VerifyContext(SweepConfig(inject_fault="gram-diagonal")).gram_under_test(prior)

        assert np.allclose(np.diag(clean), 1.0)
        assert np.allclose(np.diag(faulty), 1.001)
        off = ~np.eye(clean.shape[0], dtype=bool)
        assert np.array_equal(clean[off], faulty[off])

    @pytest.mark.parametrize("module,name", [
        ("channel", "gram matrix has unit diagonal and is PSD"),
        ("estimator", "gram identity matches dense squared error"),
    ])
    def test_fault_detected(self, module, name):
        fn = _registered(module, name)

        assert fn(VerifyContext(SweepConfig()))[0]
        assert not fn(VerifyContext(SweepConfig(inject_fault="gram-diagonal")))[0]


class TestOrthogonalTwoOracles:
    """Tests for the quadrature oracles of the two-point orthogonal prior."""

    def test_values_at_zero(self):
        assert orthogonal2_mmse(0.0) == pytest.approx(0.5)
        assert orthogonal2_kl(0.0) == pytest.approx(0.0, abs=1e-12)

    def test_limits(self):
        assert orthogonal2_mmse(200.0) < 1e-10
        assert orthogonal2_kl(200.0) == pytest.approx(100.0 - log(2.0), abs=1e-6)

    def test_mmse_matches_simulation(self, streams):
        lam = 2.0
        estimate = mmse_monte_carlo(build_instance(make_prior("orthogonal", m=2), lam), 4000, streams)

        assert abs(estimate.value - orthogonal2_mmse(lam)) <= 4 * estimate.standard_error


@pytest.mark.slow
class TestFullSuite:
    """The whole suite at the default seed."""

    def test_all_checks_pass(self):
        results = run_checks(SweepConfig())
        failed = [f"{r.module}/{r.name}: {r.detail}" for r in results if not r.passed]
        assert failed == []
