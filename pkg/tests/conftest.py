import math

import numpy as np
import pytest
from hypothesis import strategies as st

from axihelfrich import shapes
from axihelfrich.energy import MaterialParams

FOUR_PI = 4.0 * math.pi


@pytest.fixture(scope="session")
def sphere512():
    return shapes.sphere(512)


@pytest.fixture(scope="session")
def torus512():
    return shapes.torus(512)


@pytest.fixture
def default_params():
    return MaterialParams(1.0, -1.0, 0.0)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def random_curves(draw, n=256, kind=None):
    rng = np.random.default_rng(draw(seeds))
    if kind == "g0":
        return shapes.random_g0(rng, n)
    if kind == "g1":
        return shapes.random_g1(rng, n)
    return shapes.random_curve(rng, n)


def rel(a, b):
    return abs(a - b) / abs(b)


def order(errors, ns=(64, 128, 256, 512)):
    """Least-squares log-log slope of the error against N."""
    return -np.polyfit(np.log(ns), np.log(errors), 1)[0]


# criterion number -> one-line verdict, filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
