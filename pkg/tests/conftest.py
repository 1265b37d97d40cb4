import numpy as np
import pytest
from hypothesis import settings

from spinpair.simulator import SpinCollisionSimulator

settings.register_profile("spinpair", deadline=None, max_examples=50)
settings.load_profile("spinpair")

# Desk-scale reference system: 318 modes at 2 uK in the default trap.
DESK_TEMPERATURE_UK = 2.0


@pytest.fixture(scope="session")
def desk_simulator():
    return SpinCollisionSimulator(temperature_uk=DESK_TEMPERATURE_UK, b_field=0.0).fit()


@pytest.fixture(scope="session")
def delta_simulator():
    return SpinCollisionSimulator(temperature_uk=DESK_TEMPERATURE_UK, b_field=0.0, backend="delta").fit()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(label, title, ok, detail):
        label = str(label)
        line = f"criterion {label:>3} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        ACCEPTANCE_LINES.append(((int(label.rstrip("ab")), label), line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
