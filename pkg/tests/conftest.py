import math
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from fiqsim import FiqState, seed_stream


def within_binomial(count, n, p, z):
    sigma = math.sqrt(n * p * (1 - p))
    if sigma == 0:
        return count == round(n * p)
    return abs(count - n * p) <= z * sigma


@pytest.fixture
def rng():
    return seed_stream(20240601, 0)


def fractions_open(max_den=16):
    """Rationals strictly inside (0, 1)."""
    return st.integers(2, max_den).flatmap(
        lambda d: st.integers(1, d - 1).map(lambda n: Fraction(n, d)))


def fractions_closed(max_den=16):
    return st.integers(1, max_den).flatmap(
        lambda d: st.integers(0, d).map(lambda n: Fraction(n, d)))


def fiq_states(max_prefix=6, max_biased=5):
    return st.builds(
        FiqState,
        st.lists(st.integers(0, 1), max_size=max_prefix).map(tuple),
        st.lists(fractions_open(), max_size=max_biased).map(tuple),
    )


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
