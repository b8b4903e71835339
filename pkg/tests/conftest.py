import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class CriterionRecord:
    def __init__(self, number, name, limit):
        self.number, self.name, self.limit = number, name, limit
        self.ok = False
        self.detail = ""
        self.elapsed = float("nan")
        self.start = None

    def stop(self):
        import time
        if self.elapsed != self.elapsed:
            self.elapsed = time.perf_counter() - self.start

    @property
    def passed(self):
        return self.ok and self.elapsed < self.limit

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        budget = f"{self.elapsed:.1f}s/{self.limit:.0f}s"
        return f"[{tag}] criterion {self.number:2d} {self.name}: {self.detail} ({budget})"


_CRITERIA = []


@pytest.fixture
def criterion():
    """Context manager factory: times a criterion and logs one pass/fail line."""
    import contextlib
    import time

    @contextlib.contextmanager
    def run(number, name, limit):
        rec = CriterionRecord(number, name, limit)
        rec.start = time.perf_counter()
        try:
            yield rec
        except Exception as exc:
            rec.ok = False
            rec.detail = (rec.detail + " " if rec.detail else "") + f"error: {exc!r}"
            raise
        finally:
            rec.stop()
            _CRITERIA.append(rec)
            print(rec.line())

    return run


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for rec in sorted(_CRITERIA, key=lambda r: r.number):
        terminalreporter.write_line(rec.line())
