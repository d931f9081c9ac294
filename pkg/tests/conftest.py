import numpy as np
import pytest

from primdetect.calibration import calibrate
from primdetect.geometry import generate_gear


@pytest.fixture(scope="session")
def profile():
    """Default planar profile (degrees 1..4)."""
    return calibrate(m_cap=4, seed=0)


@pytest.fixture(scope="session")
def conic_profile():
    """Planar profile calibrated up to degree 2."""
    return calibrate(m_cap=2, seed=0)


@pytest.fixture(scope="session")
def gear8():
    return generate_gear(8, "exact")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record and print one acceptance line, then fail the test if the criterion failed."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])
    terminal = request.config.pluginmanager.get_plugin("terminalreporter")

    def _report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        if terminal is not None:
            terminal.write_line("")
            terminal.write_line(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
