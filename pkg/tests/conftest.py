"""Shared fixtures: the three polynomial 3D manifolds and their caustic curves."""

from fractions import Fraction

import numpy as np
import pytest

from causticlab.manifold import ManifoldSpec
from causticlab.poly import MultiPoly


def _poly3(terms):
    return MultiPoly(3, terms)


def a3_spec() -> ManifoldSpec:
    # F = x^2 z/2 + x y^2/2 - y^2 z^2/16 + z^5/960
    potential = _poly3({
        (2, 0, 1): 0.5,
        (1, 2, 0): 0.5,
        (0, 2, 2): -1 / 16,
        (0, 0, 5): 1 / 960,
    })
    return ManifoldSpec(
        n=3, potential=potential,
        euler_linear=(Fraction(1), Fraction(3, 4), Fraction(1, 2)),
        euler_affine=(0j, 0j, 0j),
        charge=Fraction(1, 2), unit_index=0, name="a3")


def b3_spec() -> ManifoldSpec:
    # F = x^2 z/2 + x y^2/2 + y^3 z/6 + y^2 z^3/6 + z^7/210
    potential = _poly3({
        (2, 0, 1): 0.5,
        (1, 2, 0): 0.5,
        (0, 3, 1): 1 / 6,
        (0, 2, 3): 1 / 6,
        (0, 0, 7): 1 / 210,
    })
    return ManifoldSpec(
        n=3, potential=potential,
        euler_linear=(Fraction(1), Fraction(2, 3), Fraction(1, 3)),
        euler_affine=(0j, 0j, 0j),
        charge=Fraction(2, 3), unit_index=0, name="b3")


def h3_spec() -> ManifoldSpec:
    # F = x^2 z/2 + x y^2/2 + y^3 z^2/6 + y^2 z^5/20 + z^11/3960
    potential = _poly3({
        (2, 0, 1): 0.5,
        (1, 2, 0): 0.5,
        (0, 3, 2): 1 / 6,
        (0, 2, 5): 1 / 20,
        (0, 0, 11): 1 / 3960,
    })
    return ManifoldSpec(
        n=3, potential=potential,
        euler_linear=(Fraction(1), Fraction(3, 5), Fraction(1, 5)),
        euler_affine=(0j, 0j, 0j),
        charge=Fraction(4, 5), unit_index=0, name="h3")


# caustic components: name -> (point map, ds tangent map, target m)
def h3_curve_main(s):
    return np.array([0.0, s ** 3, s], dtype=complex)


def h3_curve_main_ds(s):
    return np.array([0.0, 3 * s ** 2, 1.0], dtype=complex)


def h3_curve_second(s):
    return np.array([0.0, -5 / 27 * s ** 3, s], dtype=complex)


def h3_curve_second_ds(s):
    return np.array([0.0, -5 / 9 * s ** 2, 1.0], dtype=complex)


def b3_curve_main(s):   # 2y - 3z^2 = 0
    return np.array([0.0, 1.5 * s ** 2, s], dtype=complex)


def b3_curve_main_ds(s):
    return np.array([0.0, 3 * s, 1.0], dtype=complex)


def b3_curve_second(s):  # 2y + z^2 = 0
    return np.array([0.0, -0.5 * s ** 2, s], dtype=complex)


def b3_curve_second_ds(s):
    return np.array([0.0, -s, 1.0], dtype=complex)


def a3_curve_main(s):   # 27y^2 + 8z^3 = 0
    return np.array([0.0, s ** 3, -1.5 * s ** 2], dtype=complex)


def a3_curve_main_ds(s):
    return np.array([0.0, 3 * s ** 2, -3 * s], dtype=complex)


@pytest.fixture(scope="session")
def a3():
    return a3_spec()


@pytest.fixture(scope="session")
def b3():
    return b3_spec()


@pytest.fixture(scope="session")
def h3():
    return h3_spec()


ALL_COMPONENTS = [
    ("h3", "y-eq-z3", h3_curve_main, h3_curve_main_ds, 5),
    ("h3", "27y-eq-m5z3", h3_curve_second, h3_curve_second_ds, 3),
    ("b3", "2y-eq-3z2", b3_curve_main, b3_curve_main_ds, 4),
    ("b3", "2y-eq-mz2", b3_curve_second, b3_curve_second_ds, 3),
    ("a3", "27y2-eq-m8z3", a3_curve_main, a3_curve_main_ds, 3),
]

SPEC_BUILDERS = {"a3": a3_spec, "b3": b3_spec, "h3": h3_spec}
