import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def clean_env(monkeypatch):
    for name in ("MOD_THREADS", "MOD_LOG_LEVEL", "MOD_MAX_DESIGN_BYTES"):
        monkeypatch.delenv(name, raising=False)
    return monkeypatch
