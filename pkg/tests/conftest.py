import math

import numpy as np
import pytest

from freqbin.spectral import CrystalSpec, PumpSpectrum, build_jsa, default_grid


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture(scope="session")
def pump():
    return PumpSpectrum.from_wavelength()


@pytest.fixture(scope="session")
def crystal():
    return CrystalSpec()


@pytest.fixture(scope="session")
def f0(grid, pump, crystal):
    return build_jsa(grid, pump, crystal)


@pytest.fixture(scope="session")
def small_grid():
    return default_grid(n=512)


@pytest.fixture(scope="session")
def small_f0(small_grid, pump, crystal):
    return build_jsa(small_grid, pump, crystal)


def nu0_of(grid):
    return grid.center / (2 * math.pi)


def rel_err(a, b):
    return abs(a - b) / abs(b)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



# one summary line per acceptance criterion, also printed at the end of the run
_CRITERIA = {}


@pytest.fixture
def report_criterion():
    def report(n, checks):
        ok = all(passed for _, passed, _ in checks)
        parts = "; ".join(f"{name}: {'ok' if passed else 'FAILED'} ({info})" for name, passed, info in checks)
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | {parts}"
        _CRITERIA[n] = line
        print(line)
        return ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
