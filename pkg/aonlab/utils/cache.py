"""
Cache utilities for aonlab.

Channel instances (support arrays, Gram matrix and its factor) are expensive to
build and are reused across subcommands inside one process, e.g. by `verify`.
"""

import hashlib
import json
import logging
import threading
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)


class InMemoryCache:
    """
    Simple thread-safe in-memory cache without expiry.
    Entries are evicted oldest-first once max_entries is reached.
    """

    def __init__(self, max_entries: int = 16):
        self.max_entries = max_entries
        self._cache: Dict[str, Any] = {}
        self._lock = threading.Lock()
        self._hits = 0
        self._misses = 0

    def get(self, key: str) -> Optional[Any]:
        """Returns the cached value or None."""
        with self._lock:
            if key in self._cache:
                self._hits += 1
                logger.debug(f"Cache HIT: {key}")
                return self._cache[key]
            self._misses += 1
        logger.debug(f"Cache MISS: {key}")
        return None

    def set(self, key: str, value: Any) -> None:
        """Stores a value, evicting the oldest entry when full."""
        with self._lock:
            if key not in self._cache and len(self._cache) >= self.max_entries:
                oldest = next(iter(self._cache))
                del self._cache[oldest]
                logger.debug(f"Cache EVICT: {oldest}")
            self._cache[key] = value
        logger.debug(f"Cache SET: {key}")

    def clear(self) -> None:
        with self._lock:
            count = len(self._cache)
            self._cache.clear()
        logger.debug(f"Cache CLEAR: {count} entries removed")

    def stats(self) -> Dict[str, Any]:
        with self._lock:
            return {
                'total_entries': len(self._cache),
                'hits': self._hits,
                'misses': self._misses
            }


# Global cache instance
cache = InMemoryCache()


class CacheManager:
    """Key scheme for cached channel instances."""

    @staticmethod
    def get_instance_cache_key(params: Dict[str, Any]) -> str:
        """Builds a cache key from the parameters that determine an instance."""
        sorted_params = dict(sorted(params.items()))
        params_str = json.dumps(sorted_params, sort_keys=True, default=str)
        params_hash = hashlib.md5(params_str.encode()).hexdigest()[:12]
        return f"instance:{params_hash}"

    @staticmethod
    def get_cached_instance(params: Dict[str, Any]) -> Optional[Any]:
        return cache.get(CacheManager.get_instance_cache_key(params))

    @staticmethod
    def cache_instance(params: Dict[str, Any], instance: Any) -> None:
        cache.set(CacheManager.get_instance_cache_key(params), instance)
