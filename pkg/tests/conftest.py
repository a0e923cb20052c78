import numpy as np
import pytest

from fraclap import Ball, ScalarField, constants
from fraclap.catalog import constant


@pytest.fixture
def unit2():
    return Ball((0.0, 0.0), 1.0)


@pytest.fixture
def zero2():
    return constant(2, 0.0)


@pytest.fixture
def k_half():
    return constants(2, 0.5)


def radial(fn, n=2, **kw):
    return ScalarField(lambda P: fn(np.sqrt(np.einsum("ij,ij->i", P, P))), n, **kw)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
