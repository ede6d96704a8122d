import time
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("eaqmac", max_examples=40, deadline=None)
settings.load_profile("eaqmac")

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def criterion(request):
    """Context manager timing one acceptance criterion and recording its outcome."""
    log = request.config.stash[ACCEPTANCE]

    @contextmanager
    def run(label: str, limit_s: float | None = None):
        details: list[str] = []
        start = time.perf_counter()
        try:
            yield details
        except BaseException:
            log.append((label, False, time.perf_counter() - start, limit_s, details))
            raise
        elapsed = time.perf_counter() - start
        ok = limit_s is None or elapsed < limit_s
        log.append((label, ok, elapsed, limit_s, details))
        if not ok:
            pytest.fail(f"{label}: runtime {elapsed:.1f}s exceeds {limit_s}s")

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE, [])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, elapsed, limit_s, details in log:
        extra = "; ".join(details)
        budget = "no limit" if limit_s is None else f"{limit_s:g}s"
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  [{elapsed:.2f}s / {budget}]  {extra}")
