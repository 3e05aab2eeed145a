"""Shared fixtures, plus a recorder that prints one PASS/FAIL line per
acceptance criterion at the end of the run."""

import time
from contextlib import contextmanager

import pytest

_RESULTS = []


class AcceptanceRecorder:
    @contextmanager
    def __call__(self, label, note=""):
        start = time.perf_counter()
        try:
            yield
        except BaseException:
            _RESULTS.append((label, False, note, time.perf_counter() - start))
            raise
        _RESULTS.append((label, True, note, time.perf_counter() - start))


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, note, elapsed in _RESULTS:
        tag = "PASS" if passed else "FAIL"
        line = f"[{tag}] {label} ({elapsed:.2f}s)"
        if note:
            line += f" -- {note}"
        terminalreporter.write_line(line)
