import numpy as np
import pytest

from spdc_herald.bogoliubov import TimeGrid, build_kernels
from spdc_herald.pump import CW, Delta, Gaussian


@pytest.fixture(scope="session")
def gaussian_kernels():
    """Gaussian pulse, x = 0.1, sigma = 1, on a 400-point grid."""
    return build_kernels(Gaussian(0.1, 1.0), TimeGrid(-8.0, 30.0, 400))


@pytest.fixture(scope="session")
def delta_kernels():
    return build_kernels(Delta(0.2), TimeGrid(-2.0, 20.0, 221))


@pytest.fixture(scope="session")
def cw_kernels():
    return build_kernels(CW(0.1), TimeGrid(-20.0, 20.0, 800))


def fitted_exponent(xs, errs):
    """Slope of log|err| against log x."""
    return float(np.polyfit(np.log(xs), np.log(np.abs(errs)), 1)[0])


#: Lines recorded by the acceptance suite, printed after the run.
ACCEPTANCE_LINES = {}


def record_criterion(number, passed, summary):
    ACCEPTANCE_LINES[number] = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}: {summary}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
