import numpy as np
import pytest


class AcceptanceReport:
    """Collects one pass/fail line per acceptance criterion."""

    def __init__(self):
        self.entries = []

    def record(self, number: int, title: str, passed: bool, detail: str = ""):
        self.entries.append((number, title, bool(passed), detail))
        assert passed, f"criterion {number} ({title}): {detail}"


_REPORT = AcceptanceReport()


@pytest.fixture(scope="session")
def acceptance():
    return _REPORT


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _REPORT.entries:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_REPORT.entries):
        status = "PASS" if passed else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}{suffix}")
