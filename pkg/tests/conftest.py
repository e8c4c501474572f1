import os
import sys
import time
from contextlib import contextmanager

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE = {}


class Criterion:
    def __init__(self, number, title, limit):
        self.number = number
        self.title = title
        self.limit = limit
        self.detail = ""
        self.elapsed = None
        self.passed = False


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion's outcome and runtime."""

    @contextmanager
    def run(number, title, limit):
        rec = Criterion(number, title, limit)
        _ACCEPTANCE[number] = rec
        t0 = time.perf_counter()
        try:
            yield rec
            rec.elapsed = time.perf_counter() - t0
            rec.passed = rec.limit is None or rec.elapsed < rec.limit
            if not rec.passed:
                rec.detail += f" [runtime {rec.elapsed:.1f}s over {rec.limit}s]"
        finally:
            if rec.elapsed is None:
                rec.elapsed = time.perf_counter() - t0
        assert rec.passed, f"criterion {number} exceeded its runtime limit: {rec.detail}"

    return run


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        rec = _ACCEPTANCE[k]
        status = "PASS" if rec.passed else "FAIL"
        terminalreporter.write_line(
            f"criterion {k:>2} {status}  {rec.title}  ({rec.elapsed:.2f}s){'  ' + rec.detail if rec.detail else ''}")
