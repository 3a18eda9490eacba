import numpy as np
import pytest

from rggmax import _backend

# criterion lines collected by test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request):
    return request.param


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
