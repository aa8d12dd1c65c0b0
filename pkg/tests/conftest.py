import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from rikit.funcrep import HALF_LINE, StepFunction

settings.register_profile("rikit", deadline=None, max_examples=60, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("rikit")

ACCEPTANCE = {}


@st.composite
def step_functions(draw, max_pieces=20, signed=True, domain=HALF_LINE):
    n = draw(st.integers(1, max_pieces))
    logs = draw(st.lists(st.floats(-6, 6), min_size=n, max_size=n, unique=True))
    br = sorted({math.exp(x) for x in logs})
    n = len(br)
    lo = -50.0 if signed else 0.0
    vals = draw(st.lists(st.one_of(st.just(0.0), st.floats(lo, 50.0)), min_size=n, max_size=n))
    if all(v == 0 for v in vals):
        vals[0] = 1.0
    return StepFunction([0.0] + br, vals, domain)


@st.composite
def nonincreasing_steps(draw, max_pieces=12):
    n = draw(st.integers(1, max_pieces))
    logs = draw(st.lists(st.floats(-5, 5), min_size=n, max_size=n, unique=True))
    br = sorted({math.exp(x) for x in logs})
    n = len(br)
    vals = sorted(draw(st.lists(st.floats(1e-3, 1e3), min_size=n, max_size=n)), reverse=True)
    return StepFunction([0.0] + br, vals, monotone="nonincreasing")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, msg = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {msg}")
