"""
Tests for the experiment harness: sweeps, reports, metadata and transition width.
"""

from math import inf, log

import pandas as pd
import pytest

from aonlab.models.config import SweepConfig
from aonlab.services.experiment_service import (
    IMMSE_COLUMNS,
    OVERLAP_COLUMNS,
    SECOND_MOMENT_COLUMNS,
    SWEEP_COLUMNS,
    records_frame,
    run_immse_report,
    run_overlap_report,
    run_second_moment_report,
    run_sweep,
    second_moment_frame,
    sweep_records,
    transition_width,
    trial_executor,
)
from aonlab.utils.csv_writer import metadata_path
from aonlab.utils.error_handlers import DomainError


def _read_meta(path):
    lines = metadata_path(path).read_text().splitlines()
    return dict(line.split("=", 1) for line in lines)


class TestSweep:
    """Tests for the beta sweep."""

    def test_records(self):
        config = SweepConfig(prior="orthogonal", m=16, beta_grid="0:2:0.5", trials=200, seed=11)
        records = sweep_records(config)

        assert [r.beta for r in records] == [0.0, 0.5, 1.0, 1.5, 2.0]
        assert records[0].kl_hat == 0.0
        assert records[0].mmse_hat == pytest.approx(15 / 16, abs=1e-12)
        assert records[2].lam == pytest.approx(2 * log(16))
        assert records[4].prop1_target == 0.5
        assert all(r.seed == 11 and r.n_trials == 200 for r in records)

    def test_identical_across_thread_counts(self):
        config = SweepConfig(prior="bernoulli", p=6, k=2, d=2, beta_grid="0:2:0.5", trials=150)
        serial = records_frame(sweep_records(config))
        with trial_executor(4) as pool:
            threaded = records_frame(sweep_records(config, pool))

        pd.testing.assert_frame_equal(serial, threaded, check_exact=True)

    def test_single_signal_rejected(self):
        config = SweepConfig(prior="bernoulli", p=3, k=3, beta_grid="0:1:0.5", trials=100)
        with pytest.raises(DomainError):
            sweep_records(config)

    def test_run_sweep_writes_csv_and_metadata(self, tmp_path):
        out = tmp_path / "sweep.csv"
        config = SweepConfig(prior="orthogonal", m=16, beta_grid="0:2:0.25", trials=200, seed=3, out=out)
        frame = run_sweep(config)

        written = pd.read_csv(out)
        assert list(written.columns) == SWEEP_COLUMNS
        assert len(written) == len(frame) == 9

        meta = _read_meta(out)
        assert meta["experiment"] == "sweep"
        assert meta["config.seed"] == "3"
        assert meta["prior"] == "orthogonal(M=16,d=1)"
        assert "timestamp" in meta and "version" in meta and "transition_width" in meta

    def test_byte_identical_reruns(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path, threads in zip(paths, (1, 3)):
            run_sweep(SweepConfig(prior="orthogonal", m=8, beta_grid="0:1:0.5", trials=130, threads=threads, out=path))

        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestReports:
    """Tests for the overlap, second-moment and I-MMSE reports."""

    def test_overlap_report(self, tmp_path):
        out = tmp_path / "overlap.csv"
        frame = run_overlap_report(SweepConfig(prior="orthogonal", m=16, t_grid="0:1:0.25", out=out))

        assert list(frame.columns) == OVERLAP_COLUMNS
        assert frame["rate"].tolist()[1:] == pytest.approx([1.0] * 4)
        assert float(_read_meta(out)["min_margin"]) == pytest.approx(0.0, abs=1e-12)

    def test_second_moment_tables(self):
        config = SweepConfig(prior="bernoulli", p=200, k=4, d=2, lambda_grid="100,1000", rho_grid="-1,0,0.5,1")
        frame = second_moment_frame(config)

        assert list(frame.columns) == SECOND_MOMENT_COLUMNS
        assert set(frame["table"]) == {"prop5", "rate", "bound"}
        # lambda_N joins the configured ladder
        assert len(frame[frame["table"] == "bound"]) == 3
        assert len(frame[frame["table"] == "prop5"]) == 3 * 4
        bound = frame[frame["table"] == "bound"]
        assert (bound["chi2_corrected"] <= bound["finite_size_bound"] + 1e-9).all()

    def test_second_moment_report_metadata(self, tmp_path):
        out = tmp_path / "sm.csv"
        run_second_moment_report(SweepConfig(prior="orthogonal", m=64, lambda_grid="100", rho_grid="0,0.5", out=out))

        meta = _read_meta(out)
        assert meta["experiment"] == "second-moment"
        assert float(meta["max_scaled_margin"]) <= float(meta["prop5_constant"])

    def test_immse_report(self, tmp_path):
        out = tmp_path / "immse.csv"
        frame = run_immse_report(SweepConfig(prior="orthogonal", m=16, beta_grid="0:2:0.25", trials=1000, out=out))

        assert list(frame.columns) == IMMSE_COLUMNS
        assert pd.isna(frame["residual"].iloc[0])
        assert frame["residual"].dropna().abs().max() <= 0.2


class TestTransitionWidth:
    """Tests for the 0.75 to 0.25 band of the MMSE curve."""

    def test_interpolated_example(self):
        width = transition_width([0.0, 1.0, 2.0, 3.0, 4.0], [1.0, 0.8, 0.5, 0.2, 0.0])
        assert width == pytest.approx(5 / 3)

    def test_never_reaches_lower_level(self):
        assert transition_width([0.0, 1.0], [1.0, 0.9]) == inf

    def test_starts_below_upper_level(self):
        assert transition_width([0.0, 1.0, 2.0], [0.5, 0.3, 0.1]) == pytest.approx(1.25)

    def test_mismatched_columns(self):
        with pytest.raises(DomainError):
            transition_width([0.0, 1.0], [1.0])
