"""
Experiment orchestration: beta sweeps, overlap and second-moment reports, the
I-MMSE table, and their CSV + metadata emission.

The harness owns the only thread pool. Services receive it as an optional
executor and merge trial chunks in trial order, so every CSV is byte-identical
for any thread count.
"""

from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from datetime import datetime, timezone
from math import inf
from typing import Any, Dict, Iterator, List, Optional, Sequence
import logging

import numpy as np
import pandas as pd

from .. import __version__
from ..models.config import SweepConfig, SweepRecord
from ..utils.csv_writer import write_csv, write_metadata
from ..utils.error_handlers import DomainError
from ..utils.logger import ExperimentEventLogger
from ..utils.logging_config import LogContext
from ..utils.monitoring import RunMonitor
from ..utils.rng import TrialStreams
from ..utils.stats import mean_and_se
from .channel_service import build_instance, lambda_for_beta
from .divergence_service import immse_curve_check, max_immse_residual, prop1_target
from .estimator_service import simulate_beta_grid
from .prior_service import log_cardinality, prior_from_config
from .second_moment_service import (
    PROP5_CONSTANT,
    conditional_chi_square_bound,
    critical_lambda,
    prop5_margin,
    supremum_gap,
    theorem4_finite_size_bound,
)
from .tensor_service import default_t_grid, rate_function

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "beta", "lambda", "mmse_hat", "mmse_se", "kl_hat", "kl_se",
    "kl_normalized", "prop1_target", "n_trials", "seed",
]
OVERLAP_COLUMNS = ["t", "tail", "rate", "bound", "margin"]
SECOND_MOMENT_COLUMNS = [
    "table", "lambda", "rho", "t", "log_m_n", "normalized", "target", "margin",
    "scaled_margin", "rate", "gap", "omega_probability", "log_expected_m",
    "chi2_normalized", "chi2_corrected", "theorem4_rhs", "finite_size_bound",
]
IMMSE_COLUMNS = [
    "beta", "lambda", "kl_normalized", "kl_normalized_se", "mmse", "mmse_se",
    "derivative", "target", "residual", "prop1_target",
]

UPPER_LEVEL = 0.75
LOWER_LEVEL = 0.25


@contextmanager
def trial_executor(threads: int) -> Iterator[Optional[Executor]]:
    """A thread pool for threads > 1, otherwise serial execution (None)."""
    if threads <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="aonlab-trial") as pool:
        yield pool


def _caps(config: SweepConfig) -> Dict[str, int]:
    return {
        "gram_cap": config.gram_cap,
        "ambient_cap": config.ambient_cap,
        "enumeration_cap": config.enumeration_cap,
    }


def sweep_records(config: SweepConfig, executor: Optional[Executor] = None) -> List[SweepRecord]:
    """
    One SweepRecord per beta, all betas evaluated on the same trials.

    Raises:
        CardinalityExceeded: when no projection backend fits the caps
        DomainError: for a prior with a single signal (lambda_N = 0)
    """
    prior = prior_from_config(config)
    lam_n = 2.0 * log_cardinality(prior)
    if lam_n <= 0:
        raise DomainError("a sweep needs a prior with at least two signals")

    instance = build_instance(prior, 0.0, **_caps(config))
    lambdas = [lambda_for_beta(prior, b) for b in config.beta_grid]
    streams = TrialStreams(config.seed, "sweep")
    sim = simulate_beta_grid(instance, lambdas, config.trials, streams, executor)

    mmse, mmse_se = (np.atleast_1d(x) for x in mean_and_se(sim.sq_error))
    kl, kl_se = (np.atleast_1d(x) for x in mean_and_se(sim.log_z))

    records = []
    for a, (beta, lam) in enumerate(zip(config.beta_grid, lambdas)):
        record = SweepRecord(
            beta=beta,
            lam=lam,
            mmse_hat=float(mmse[a]),
            mmse_se=float(mmse_se[a]),
            kl_hat=float(kl[a]),
            kl_se=float(kl_se[a]),
            kl_normalized=float(kl[a]) / lam_n,
            prop1_target=prop1_target(beta),
            n_trials=config.trials,
            seed=config.seed,
        )
        ExperimentEventLogger.point_completed("sweep", beta, record.mmse_hat, record.kl_hat)
        records.append(record)
    return records


def records_frame(records: Sequence[SweepRecord]) -> pd.DataFrame:
    """SweepRecords as a frame with the CSV header (lambda, not lam)."""
    return pd.DataFrame([r.model_dump(by_alias=True) for r in records], columns=SWEEP_COLUMNS)


def run_metadata(config: SweepConfig, experiment: str, monitor: RunMonitor) -> Dict[str, Any]:
    """Effective configuration, version, timestamp, step timings and system stats."""
    metadata: Dict[str, Any] = {
        "experiment": experiment,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
    }
    for key, value in config.model_dump(mode="json").items():
        if value is not None:
            metadata[f"config.{key}"] = value
    stats = monitor.get_stats()
    metadata["elapsed_seconds"] = stats["elapsed_seconds"]
    for step, duration in stats["steps"].items():
        metadata[f"step.{step}"] = duration
    for key, value in stats["system_stats"].items():
        metadata[f"system.{key}"] = value
    return metadata


def _emit(frame: pd.DataFrame, config: SweepConfig, experiment: str, monitor: RunMonitor,
          extra: Optional[Dict[str, Any]] = None) -> None:
    write_csv(frame, config.out)
    metadata = run_metadata(config, experiment, monitor)
    metadata.update(extra or {})
    write_metadata(config.out, metadata)
    ExperimentEventLogger.report_written(experiment, str(config.out) if config.out else None, len(frame))


def run_sweep(config: SweepConfig) -> pd.DataFrame:
    """Beta sweep of MMSE and KL; writes the CSV and its sidecar."""
    prior = prior_from_config(config)
    ExperimentEventLogger.sweep_started(
        "sweep", prior.label, len(config.beta_grid), config.trials, config.seed, config.threads
    )
    monitor = RunMonitor()
    with trial_executor(config.threads) as executor:
        with monitor.step("simulate", config.trials):
            records = sweep_records(config, executor)

    frame = records_frame(records)
    _emit(frame, config, "sweep", monitor, {
        "prior": prior.label,
        "log_m": log_cardinality(prior),
        "transition_width": transition_width(frame["beta"].tolist(), frame["mmse_hat"].tolist()),
    })
    return frame


def overlap_frame(config: SweepConfig) -> pd.DataFrame:
    prior = prior_from_config(config)
    rows = rate_function(prior, config.t_grid if config.t_grid is not None else default_t_grid())
    return pd.DataFrame([r.model_dump() for r in rows], columns=OVERLAP_COLUMNS)


def run_overlap_report(config: SweepConfig) -> pd.DataFrame:
    """Exact tails, rate function and margin over 2t/(1+t) of the lifted prior."""
    prior = prior_from_config(config)
    monitor = RunMonitor()
    with monitor.step("rate_function"):
        frame = overlap_frame(config)
    _emit(frame, config, "overlap", monitor, {
        "prior": prior.label,
        "log_m": log_cardinality(prior),
        "min_margin": float(frame["margin"].min()),
    })
    return frame


def second_moment_frame(config: SweepConfig) -> pd.DataFrame:
    """
    Long-format table with a `table` column:

    * prop5: (1/lambda) log m(rho, lambda) against (rho/(1+rho))_+ per (lambda, rho);
    * rate: t/(1+t) - r(t)/2 per t, whose positive supremum is theorem4_rhs;
    * bound: the conditional chi-square bound per lambda, with theorem4_rhs and the
      exact finite-size bound.

    The lambda ladder is config.lambda_grid plus lambda_N = 2 log M_N.
    """
    prior = prior_from_config(config)
    lam_n = critical_lambda(prior)
    lambdas = list(config.lambda_grid)
    if lam_n > 0 and lam_n not in lambdas:
        lambdas.append(lam_n)

    rows: List[Dict[str, Any]] = []
    for lam in lambdas:
        for row in prop5_margin(config.rho_grid, lam):
            rows.append({
                "table": "prop5", "lambda": lam, "rho": row.rho, "log_m_n": row.log_m,
                "normalized": row.normalized, "target": row.target, "margin": row.margin,
                "scaled_margin": row.scaled_margin,
            })

    rate_rows = rate_function(prior, config.t_grid if config.t_grid is not None else default_t_grid())
    for row in rate_rows:
        gap = -inf if row.rate == inf else row.t / (1.0 + row.t) - row.rate / 2.0
        rows.append({"table": "rate", "t": row.t, "rate": row.rate, "gap": gap})
    rhs = supremum_gap([r.t for r in rate_rows], [r.rate for r in rate_rows])

    for lam in lambdas:
        bound = conditional_chi_square_bound(prior, lam)
        rows.append({
            "table": "bound", "lambda": lam,
            "omega_probability": bound.omega_probability,
            "log_expected_m": bound.log_expected_m,
            "chi2_normalized": bound.normalized,
            "chi2_corrected": bound.corrected_normalized,
            "theorem4_rhs": rhs,
            "finite_size_bound": theorem4_finite_size_bound(prior, lam),
        })
    return pd.DataFrame(rows, columns=SECOND_MOMENT_COLUMNS)


def run_second_moment_report(config: SweepConfig) -> pd.DataFrame:
    """Truncated-moment margins and conditional chi-square bounds."""
    prior = prior_from_config(config)
    monitor = RunMonitor()
    with monitor.step("second_moment"):
        frame = second_moment_frame(config)
    prop5 = frame[frame["table"] == "prop5"]
    _emit(frame, config, "second-moment", monitor, {
        "prior": prior.label,
        "log_m": log_cardinality(prior),
        "prop5_constant": PROP5_CONSTANT,
        "max_scaled_margin": float(prop5["scaled_margin"].max()),
    })
    return frame


def run_immse_report(config: SweepConfig) -> pd.DataFrame:
    """I-MMSE consistency table along the configured beta grid."""
    prior = prior_from_config(config)
    monitor = RunMonitor()
    streams = TrialStreams(config.seed, "immse-check")
    with trial_executor(config.threads) as executor:
        with monitor.step("simulate", config.trials):
            rows = immse_curve_check(prior, config.beta_grid, config.trials, streams, executor, **_caps(config))

    frame = pd.DataFrame([r.model_dump() for r in rows]).rename(columns={"lam": "lambda"})[IMMSE_COLUMNS]
    worst = max_immse_residual(rows)
    LogContext(logger, experiment="immse-check", prior=prior.label).info(
        f"Largest I-MMSE residual {worst:.4f} over {len(rows)} grid points"
    )
    _emit(frame, config, "immse-check", monitor, {
        "prior": prior.label,
        "max_abs_residual": worst,
    })
    return frame


def _first_crossing(betas: Sequence[float], mmse: Sequence[float], level: float) -> float:
    for i, value in enumerate(mmse):
        if value <= level:
            if i == 0:
                return float(betas[0])
            prev = mmse[i - 1]
            frac = (prev - level) / (prev - value)
            return float(betas[i - 1] + frac * (betas[i] - betas[i - 1]))
    return inf


def transition_width(betas: Sequence[float], mmse: Sequence[float]) -> float:
    """
    Width in beta of the band where the MMSE curve falls from 0.75 to 0.25,
    using linear interpolation of the first crossings; +inf if 0.25 is never reached.
    """
    if len(betas) != len(mmse) or not betas:
        raise DomainError("transition width needs matching nonempty beta and MMSE columns")
    upper = _first_crossing(betas, mmse, UPPER_LEVEL)
    lower = _first_crossing(betas, mmse, LOWER_LEVEL)
    if lower == inf:
        return inf
    return lower - upper
