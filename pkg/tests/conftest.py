from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from mllab.dyadic import StepFunction

settings.register_profile("mllab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "mllab"))

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _CRITERIA[num] = (title, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, status = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:>2} {status}  {title}")


# -- shared strategies -------------------------------------------------------------


@st.composite
def step_functions(draw, dim: int = 1, max_cells: int = 8, level=st.integers(-2, 4), span: int = 16,
                   signed: bool = True):
    lev = draw(level)
    n = draw(st.integers(1, max_cells))
    keys = draw(st.lists(st.tuples(*[st.integers(0, span - 1)] * dim), min_size=n, max_size=n, unique=True))
    lo = -1.0 if signed else 0.05
    vals = draw(st.lists(st.floats(lo, 1.0, allow_nan=False).filter(lambda v: abs(v) > 1e-3),
                         min_size=n, max_size=n))
    return StepFunction(dim, lev, np.array(keys), np.array(vals))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
