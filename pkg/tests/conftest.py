"""Shared data generators for the test suite."""

import math
import warnings

import numpy as np
import pytest

from pluriminimal.expr import HoloExpr
from pluriminimal.family import FamilyInput, solve_family, split_pairs
from pluriminimal.weierstrass import OneForm, WeierstrassData

TRANSCENDENTAL = [("exp(z1)", "sin(z1)"), ("cos(z1)", "z1^2*exp(z1)")]


def random_poly(rng, degree=5, scale=1.0):
    """sum_k c_k z^k / k! with c_k on a 1/1000 grid in the unit box.

    The factorial keeps values on the radius-2 polydisk O(1), so the
    absolute tolerances of the checks remain meaningful.
    """
    z = HoloExpr.var(0, 1)
    e = HoloExpr.const(0, 1)
    for k in range(degree + 1):
        c = complex(*np.round(rng.uniform(-1, 1, 2), 3)) * scale / math.factorial(k)
        c = complex(round(c.real, 6), round(c.imag, 6))
        e = e + HoloExpr.const(c, 1) * z**k
    return e


def random_family_inputs(seed=0, count=10):
    rng = np.random.default_rng(seed)
    return [FamilyInput(random_poly(rng), random_poly(rng)) for _ in range(count)]


def family_from_input(inp):
    return split_pairs(solve_family(inp))[1]


def criterion1_datasets(seed=0):
    """The ten random polynomial and two transcendental family members."""
    out = [family_from_input(inp) for inp in random_family_inputs(seed)]
    out += [family_from_input(FamilyInput.parse(f, g)) for f, g in TRANSCENDENTAL]
    return out


def forms_data(coeff_rows, m=2):
    """WeierstrassData from coefficient text, one row of m strings per form."""
    from pluriminimal.expr import parse

    forms = [OneForm(tuple(parse(s, m) for s in row)) for row in coeff_rows]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return WeierstrassData(tuple(forms))


@pytest.fixture(scope="session")
def furuhata():
    return family_from_input(FamilyInput.parse("z1^3", "0"))


@pytest.fixture(scope="session")
def trivial():
    return family_from_input(FamilyInput.parse("0", "0"))


@pytest.fixture(scope="session")
def datasets():
    return criterion1_datasets()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
