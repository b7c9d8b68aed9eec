"""
Structured event logging for aonlab.
Provides event loggers with contextual key=value information.
"""

import logging
from typing import Any, Dict, Optional


class StructuredLogger:
    """Logger with structured output and context"""

    def __init__(self, name: str):
        # handlers come from the "aonlab" tree installed by setup_logging
        self.logger = logging.getLogger(name)

    def _format_structured_message(self, event: str, context: Dict[str, Any]) -> str:
        """Format message with structured context"""
        message = f"{event}"
        if context:
            context_str = " | ".join([f"{k}={v}" for k, v in context.items()])
            message += f" ({context_str})"
        return message

    def info(self, event: str, **context):
        """Log info level with structured context"""
        self.logger.info(self._format_structured_message(event, context))

    def warning(self, event: str, **context):
        """Log warning level with structured context"""
        self.logger.warning(self._format_structured_message(event, context))

    def error(self, event: str, **context):
        """Log error level with structured context"""
        self.logger.error(self._format_structured_message(event, context))

    def debug(self, event: str, **context):
        """Log debug level with structured context"""
        self.logger.debug(self._format_structured_message(event, context))


experiment_logger = StructuredLogger("aonlab.experiments")
verification_logger = StructuredLogger("aonlab.verification")
performance_logger = StructuredLogger("aonlab.performance")


class ExperimentEventLogger:
    """Specialized logger for sweep and report events"""

    @staticmethod
    def sweep_started(experiment: str, prior: str, n_points: int, n_trials: int, seed: int, threads: int):
        """Log the start of an experiment"""
        experiment_logger.info(
            "Experiment started",
            experiment=experiment,
            prior=prior,
            points=n_points,
            trials=n_trials,
            seed=seed,
            threads=threads
        )

    @staticmethod
    def point_completed(experiment: str, beta: float, mmse: float, kl: float):
        """Log one completed grid point"""
        experiment_logger.debug(
            "Grid point completed",
            experiment=experiment,
            beta=beta,
            mmse=f"{mmse:.6g}",
            kl=f"{kl:.6g}"
        )

    @staticmethod
    def report_written(experiment: str, path: Optional[str], rows: int):
        """Log report emission"""
        experiment_logger.info(
            "Report written",
            experiment=experiment,
            path=path or "<stdout>",
            rows=rows
        )

    @staticmethod
    def instance_built(prior: str, backend: str, size: int, jitter: float = 0.0):
        """Log construction of a channel instance"""
        experiment_logger.info(
            "Channel instance built",
            prior=prior,
            backend=backend,
            size=size,
            jitter=jitter
        )


class VerificationEventLogger:
    """Specialized logger for the invariant suite"""

    @staticmethod
    def check_passed(check: str, detail: str):
        """Log a passing check"""
        verification_logger.info("Check passed", check=check, detail=detail)

    @staticmethod
    def check_failed(check: str, detail: str):
        """Log a failing check"""
        verification_logger.error("Check failed", check=check, detail=detail)

    @staticmethod
    def fault_injected(fault: str):
        """Log a deliberately injected fault"""
        verification_logger.warning("Fault injected", fault=fault)


class PerformanceLogger:
    """Logger for performance monitoring"""

    @staticmethod
    def step_performance(step: str, duration_ms: float, trials: int = 0):
        """Log the duration of a run step"""
        level = "warning" if duration_ms > 60000 else "info"  # Warn if over 1 minute

        getattr(performance_logger, level)(
            "Step performance",
            step=step,
            duration_ms=round(duration_ms, 1),
            trials=trials
        )


__all__ = [
    'experiment_logger',
    'verification_logger',
    'performance_logger',
    'StructuredLogger',
    'ExperimentEventLogger',
    'VerificationEventLogger',
    'PerformanceLogger'
]
