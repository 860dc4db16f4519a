"""Shared laws and strategies; prints the acceptance summary at the end of the run."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from skipfree.distributions import drift, make_finite

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def finite_law(p_minus_one, points, weights):
    """Law with mass p_minus_one at -1 and the rest spread over ``points``."""
    weights = np.asarray(weights, dtype=float)
    rest = (1.0 - p_minus_one) * weights / weights.sum()
    return make_finite([(-1, p_minus_one)] + list(zip(points, rest)))


def random_suite(n=200, seed=20240501, max_size=8, max_point=12):
    """``n`` random left-continuous laws: support size <= ``max_size``,
    p_{-1} in [0.05, 0.6], positive drift."""
    rng = np.random.default_rng(seed)
    laws = []
    while len(laws) < n:
        size = int(rng.integers(2, max_size + 1))
        points = sorted(rng.choice(np.arange(0, max_point + 1), size=size - 1, replace=False).tolist())
        p = float(rng.uniform(0.05, 0.6))
        dist = finite_law(p, points, rng.dirichlet(np.ones(size - 1)))
        if drift(dist) > 0.0:
            laws.append(dist)
    return laws


@st.composite
def walk_laws(draw, max_size=8, max_point=12, min_drift=0.02):
    size = draw(st.integers(2, max_size))
    points = draw(st.lists(st.integers(0, max_point), min_size=size - 1, max_size=size - 1, unique=True))
    p = draw(st.floats(0.05, 0.6))
    weights = draw(st.lists(st.floats(0.05, 1.0), min_size=size - 1, max_size=size - 1))
    dist = finite_law(p, sorted(points), [w for _, w in sorted(zip(points, weights))])
    from hypothesis import assume

    assume(drift(dist) > min_drift)
    return dist


@pytest.fixture(scope="session")
def suite():
    return random_suite()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
