import math

import numpy as np
import pytest
from hypothesis import settings

from kolmobounds import Lattice, abc_flow, random_band_limited

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

V_STD = (2 * math.pi) ** 3


@pytest.fixture(scope="session")
def lat8():
    return Lattice((8, 8, 8))


@pytest.fixture(scope="session")
def lat16():
    return Lattice((16, 16, 16))


@pytest.fixture(scope="session")
def lat_aniso():
    return Lattice((8, 6, 10), (2 * math.pi, 5.0, 7.0))


@pytest.fixture
def random_field(lat16):
    return random_band_limited(lat16, 11, (1.0, 4.0), 1.0)


@pytest.fixture
def beltrami16(lat16):
    return abc_flow(lat16, 1.0, 1.0, 1.0, 1.0)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
