import numpy as np
import pytest

from microswarm.analytics import PhysicalParams, derive_coefficients
from microswarm.models import Model

MODELS = [Model.ABP, Model.RTP, Model.CHIRAL_ABP, Model.PBP]


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture(scope="session")
def coeffs(params):
    return derive_coefficients(params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
