import numpy as np
import pytest

from shapwor.data import fit_linear, generate_synthetic

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_data():
    return generate_synthetic(5, 400, noise_sd=1.0, seed=3, rho=0.5)


@pytest.fixture(scope="session")
def regression_oracle(small_data):
    return fit_linear(small_data, kind="linear-regression")


@pytest.fixture(scope="session")
def marginal_oracle(small_data):
    return fit_linear(small_data, kind="linear-marginal")
