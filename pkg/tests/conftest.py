import numpy as np
import pytest

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE_RESULTS: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "property: fast property suites (criterion 7)")
    config.addinivalue_line("markers", "slow: long-running reproduction checks")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
