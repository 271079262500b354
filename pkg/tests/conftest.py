import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    def record(number: int, title: str, checks: dict):
        ACCEPTANCE[number] = (title, checks)
        return checks
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, checks = ACCEPTANCE[n]
        ok = all(passed for passed, _ in checks.values())
        tr.write_line(f"criterion {n} {'PASS' if ok else 'FAIL'}: {title}")
        for name, (passed, detail) in checks.items():
            tr.write_line(f"    [{'ok' if passed else 'FAILED'}] {name}: {detail}")
