import numpy as np
import pytest

from phasegpt.grid import PhaseGrid


@pytest.fixture(scope="session")
def grid64():
    return PhaseGrid.square(64, 8.0)


@pytest.fixture(scope="session")
def grid128():
    return PhaseGrid.square(128, 8.0)


@pytest.fixture(scope="session")
def torus32():
    """32x32 on [-2pi, 2pi)^2: cos q and cos p are band-limited here."""
    return PhaseGrid.square(32, 2 * np.pi)


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config._acceptance_lines

    def record(number, title, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
