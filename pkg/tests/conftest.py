from fractions import Fraction

import numpy as np
import pytest

from matchpoly.core import make_sym_zero, num_pairs

ACCEPTANCE_LINES: list[str] = []


def random_rational(order, rng, max_num=7, max_den=5, signed=False):
    lo = -max_num if signed else 0
    return make_sym_zero(order, [Fraction(int(rng.integers(lo, max_num + 1)), int(rng.integers(1, max_den + 1)))
                                 for _ in range(num_pairs(order))])


def random_float(order, rng, low=0.0, high=1.0):
    return make_sym_zero(order, rng.uniform(low, high, num_pairs(order)).tolist())


@pytest.fixture
def rng():
    return np.random.default_rng(20110217)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
