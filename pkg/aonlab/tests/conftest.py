"""
Pytest configuration and fixtures for aonlab tests.
"""

import pytest

from aonlab.services.prior_service import make_prior
from aonlab.settings import get_settings
from aonlab.utils.cache import cache
from aonlab.utils.rng import TrialStreams

TEST_SEED = 20240601


@pytest.fixture
def streams():
    """Fixed-seed stream family; tests derive disjoint experiments from it."""
    return TrialStreams(TEST_SEED, "tests")


@pytest.fixture
def rng(streams):
    return streams.generator(0)


@pytest.fixture
def orthogonal16():
    return make_prior("orthogonal", m=16)


@pytest.fixture
def bernoulli_small():
    """Bernoulli(p=4, k=2, d=2): 6 signals, 16 ambient coordinates."""
    return make_prior("bernoulli", p=4, k=2, d=2)


@pytest.fixture
def signed_small():
    """Bernoulli-Rademacher(p=4, k=2, d=2): 24 signed vectors, 12 distinct tensors."""
    return make_prior("bernoulli-rademacher", p=4, k=2, d=2)


@pytest.fixture(autouse=True)
def reset_caches(monkeypatch):
    """Clear the instance cache and settings before each test to prevent test interference."""
    for name in ("AONLAB_THREADS", "AONLAB_LOG_FILE", "AONLAB_GRAM_CAP", "AONLAB_AMBIENT_CAP",
                 "AONLAB_ENUMERATION_CAP"):
        monkeypatch.delenv(name, raising=False)
    cache.clear()
    get_settings.cache_clear()

    yield

    cache.clear()
    get_settings.cache_clear()
