import numpy as np
import pytest

from oceansim.spectra import SpectrumParams
from oceansim.surface import build_cascades


@pytest.fixture(scope="session")
def params20():
    return SpectrumParams(wind_speed=20.0, rng_seed=3)


@pytest.fixture(scope="session")
def small_cascades(params20):
    return build_cascades(params20, N=16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for the acceptance summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number, ok, detail):
        lines.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(lines[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
