"""
Run monitoring utilities for aonlab.
"""

import logging
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, List

import psutil

from .logger import PerformanceLogger

logger = logging.getLogger(__name__)


class RunMonitor:
    """Records step timings of one experiment run."""

    def __init__(self):
        self.steps: List[Dict[str, Any]] = []
        self.start_time = datetime.now(timezone.utc)
        self._t0 = time.perf_counter()

    def record_step(self, step: str, duration: float, trials: int = 0) -> None:
        """Stores the duration of a step and logs it."""
        self.steps.append({
            'step': step,
            'duration': duration,
            'trials': trials,
        })
        PerformanceLogger.step_performance(step, duration * 1000.0, trials)

    @contextmanager
    def step(self, name: str, trials: int = 0) -> Iterator[None]:
        """Times the enclosed block as a named step."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.record_step(name, time.perf_counter() - start, trials)

    def get_stats(self) -> Dict[str, Any]:
        """Returns run statistics, including system stats."""
        return {
            'started_at': self.start_time.isoformat().replace("+00:00", "Z"),
            'elapsed_seconds': round(time.perf_counter() - self._t0, 3),
            'steps': {s['step']: round(s['duration'], 3) for s in self.steps},
            'system_stats': self._get_system_stats()
        }

    def _get_system_stats(self) -> Dict[str, Any]:
        try:
            memory = psutil.virtual_memory()
            process = psutil.Process()

            return {
                'cpu_count': psutil.cpu_count(logical=True),
                'memory_percent': memory.percent,
                'memory_available_mb': round(memory.available / (1024 * 1024), 2),
                'process_rss_mb': round(process.memory_info().rss / (1024 * 1024), 2)
            }
        except Exception as e:
            logger.error(f"Error getting system stats: {e}")
            return {'error': 'Unable to get system stats'}
