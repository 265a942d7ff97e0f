import numpy as np
import pytest
from hypothesis import settings

from fraccontrol.geometry import LebesgueSpace
from fraccontrol.scenario import parse_scenario, shipped_config
from fraccontrol.spectral import FractionalParams, SpatialGrid

settings.register_profile("fraccontrol", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("fraccontrol")


@pytest.fixture(scope="session")
def grid16():
    return SpatialGrid(16)


@pytest.fixture(scope="session")
def grid32():
    return SpatialGrid(32)


@pytest.fixture(scope="session")
def fp075():
    return FractionalParams(1.5)


@pytest.fixture(scope="session")
def l2_16(grid16):
    return LebesgueSpace(2.0, grid16)


@pytest.fixture(scope="session")
def linear_scenario():
    return parse_scenario(shipped_config("linear"))


@pytest.fixture(scope="session")
def impulsive_scenario():
    return parse_scenario(shipped_config("impulsive"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Print and record one PASS/FAIL line for an acceptance criterion, then assert it."""
    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        print(line)
        request.config.stash.setdefault(ACCEPTANCE_KEY, []).append((number, line))
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
