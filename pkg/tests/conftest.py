import os

import numpy as np
import pytest

from sincfraclap.transform import set_workers

# acceptance outcomes, printed once at the end of the session
CRITERIA: list[str] = []


@pytest.fixture(autouse=True)
def _single_thread():
    set_workers(1)
    yield
    set_workers(None)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tmp_cache(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("FRACLAP_CACHE_DIR", str(d))
    return d


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
