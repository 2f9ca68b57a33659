import numpy as np
import pytest

from vocaltract import fixtures as fx
from vocaltract.core import Grid1D, PhysicalConstants
from vocaltract.gelfand_levitan import enumerate_candidates

A = 0.05
ELL = 16.0
P_INF = 60.0


@pytest.fixture(scope="session")
def kgrid():
    return Grid1D.wavenumbers(0.003, 1000)


@pytest.fixture(scope="session")
def consts():
    return PhysicalConstants()


@pytest.fixture(scope="session")
def linear_data(kgrid):
    """Exact spectrum of the linear duct r = r0 (1 + a x)."""
    return fx.linear_spectrum(A, P_INF, kgrid)


@pytest.fixture(scope="session")
def linear_candidates_401(linear_data):
    return enumerate_candidates(linear_data, ELL, 401)


@pytest.fixture(scope="session")
def const_b(kgrid):
    """Constant potential v = -1/100, cot = 1/100: one bound state."""
    return fx.constant_spectrum(-1 / 100, 1 / 100, ELL, P_INF, kgrid)


@pytest.fixture(scope="session")
def const_c(kgrid):
    """Constant potential v = -1/300, cot = 1/100: one bound state."""
    return fx.constant_spectrum(-1 / 300, 1 / 100, ELL, P_INF, kgrid)


@pytest.fixture(scope="session")
def const_b_candidates(const_b):
    return enumerate_candidates(const_b, ELL, 401)


@pytest.fixture(scope="session")
def const_c_candidates(const_c):
    return enumerate_candidates(const_c, ELL, 401)


def rel_max(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


# -----------------------------------------------------------------------------
# Acceptance summary
# -----------------------------------------------------------------------------

ACCEPTANCE = []


def record_criterion(number, passed, detail, runtime=None, limit=None):
    """Store and print one acceptance line."""
    status = "PASS" if passed else "FAIL"
    if passed is None:
        status = "NOT ATTEMPTED"
    line = f"criterion {number}: {status} | {detail}"
    if runtime is not None:
        line += f" | runtime {runtime:.1f} s" + (f" (limit {limit:.0f} s)" if limit else "")
    ACCEPTANCE.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
