import numpy as np
import pytest

# (criterion, description, passed, detail) rows filled by test_acceptance
ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance line; the test still asserts on its own."""

    def record(key, text, ok, detail=""):
        ACCEPTANCE_RESULTS.append((key, text, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {text} {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key, text, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {text} {detail}".rstrip())
