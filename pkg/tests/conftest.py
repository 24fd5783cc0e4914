import time

import pytest

_LINES = []
_START = [0.0]


def pytest_sessionstart(session):
    _START[0] = time.perf_counter()


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion.

    Usage: ``with criterion(3, "controllability fixtures") as note: ...``;
    ``note(text)`` appends detail to the line.
    """
    class _Ctx:
        def __init__(self, number, title):
            self.number, self.title, self.details = number, title, []

        def __call__(self, text):
            self.details.append(text)

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            status = "PASS" if exc_type is None else "FAIL"
            detail = "; ".join(self.details)
            if exc_type is not None:
                detail = (detail + "; " if detail else "") + f"{exc_type.__name__}: {exc}".splitlines()[0]
            line = f"criterion {self.number} [{self.title}]: {status}" + (f" ({detail})" if detail else "")
            _LINES.append((self.number, line))
            print(line)
            return False

    return _Ctx


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)
    elapsed = time.perf_counter() - _START[0]
    terminalreporter.write_line(f"suite wall time: {elapsed:.1f} s (budget 60 s)")
