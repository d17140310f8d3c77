import time

import pytest

from oracles import recovery_frame

_VERDICTS: list[str] = []


@pytest.fixture(scope="session")
def recovery():
    return recovery_frame()


class Criterion:
    """Times one acceptance criterion and records a PASS/FAIL line for the summary."""

    def __init__(self, number: int, title: str, limit_s: float):
        self.number, self.title, self.limit_s = number, title, limit_s
        self.detail = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        slow = elapsed > self.limit_s
        ok = exc_type is None and not slow
        note = self.detail
        if exc_type is not None:
            note = f"{note} {exc_type.__name__}: {exc}".strip()
        if slow:
            note = f"{note} runtime {elapsed:.1f}s exceeds {self.limit_s:g}s".strip()
        line = f"{'PASS' if ok else 'FAIL'} criterion {self.number:>2} {self.title} [{elapsed:.2f}s] {note}"
        _VERDICTS.append(line)
        print(line)
        if slow and exc_type is None:
            raise AssertionError(line)
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
