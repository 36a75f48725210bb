import time
from contextlib import contextmanager

import pytest

_LINES: dict[int, str] = {}


class _Criterion:
    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.detail = ""


@contextmanager
def _run(number, title, budget):
    c = _Criterion(number, title, budget)
    start = time.perf_counter()
    try:
        yield c
    except BaseException as e:
        elapsed = time.perf_counter() - start
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        _LINES[number] = f"criterion {number:2d} FAIL  {title} ({elapsed:.2f}s): {msg}"
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget
    status = "PASS" if ok else "FAIL"
    extra = f"; {c.detail}" if c.detail else ""
    _LINES[number] = f"criterion {number:2d} {status}  {title} ({elapsed:.2f}s of {budget:g}s{extra})"
    assert ok, f"criterion {number} took {elapsed:.1f}s, budget {budget}s"


@pytest.fixture
def criterion():
    """Context manager that times an acceptance criterion and records a pass/fail line."""
    return _run


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
