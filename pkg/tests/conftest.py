import math

import numpy as np
import pytest

from interface_lab.measures import DensitySpec

ACCEPTANCE_RESULTS = []

R_DISK = 1.0 / math.sqrt(2.0 * math.pi)


@pytest.fixture
def rho_disk():
    return DensitySpec.uniform_disk((0.0, 0.0), 0.45)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def record_criterion(number, title, passed, detail):
    ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} [{verdict}] {title}: {detail}")
