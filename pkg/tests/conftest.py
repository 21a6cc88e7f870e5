# tests/conftest.py

import pytest

from src.moments.numeric import extended_precision
from src.stochastic.sampling import SeedSpec


@pytest.fixture
def rng_factory():
    """Seeded generators: rng_factory(seed, stream_id)"""
    def make(seed: int = 20240917, stream_id: int = 0):
        return SeedSpec(seed=seed, stream_id=stream_id).generator()
    return make


@pytest.fixture
def rng(rng_factory):
    return rng_factory()


@pytest.fixture
def high_precision():
    with extended_precision(60):
        yield 60


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Run inside a scratch directory so results/ and logs/ land there"""
    monkeypatch.chdir(tmp_path)
    return tmp_path
