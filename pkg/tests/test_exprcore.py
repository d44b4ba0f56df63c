import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superslow.convolution import phi
from superslow.exprcore import (
    Expression,
    TrigError,
    amp,
    coeffn,
    const,
    eps,
    lam,
    rooteps,
    set_small_one,
    sigma,
    sin,
    sin_series,
    small,
    trig_combine,
    truncation,
)

# -- brute-force oracles ----------------------------------------------------------

XQ = (np.arange(4096) + 0.5) * np.pi / 4096


def sine_profile(e: Expression) -> np.ndarray:
    """Evaluate a purely spatial expression (rational coefficients only) on a grid."""
    total = np.zeros_like(XQ)
    for t in e:
        assert t.grading == (0, 0, 0, 0, 0) and t.a_pow == 0 and not t.noise
        if t.mode > 0:
            total += float(t.coeff) * np.sin(t.mode * XQ)
        elif t.mode < 0:
            total += float(t.coeff) * np.cos(-t.mode * XQ)
        else:
            total += float(t.coeff)
    return total


def project(f: np.ndarray, m: int) -> float:
    return float(np.mean(f * np.sin(m * XQ)) * 2)


# -- ring arithmetic ------------------------------------------------------------------

def test_like_terms_merge():
    e = amp() * sin(1)
    assert e + e == e * 2
    assert len(e + e) == 1


def test_zero_annihilates():
    assert (amp() * sin(1) * const(0)).is_zero()
    assert len(amp() * sin(1) * 0) == 0


def test_truncation_drops_high_order():
    with truncation(6):
        e = small(5) * amp() * sin(1)
        f = small(1) * lam() * sin(2)
        assert (e * f).is_zero()
        assert not (small(4) * amp() * (small(1) * lam())).is_zero()


def test_sigma_cap():
    with truncation(8, 2):
        assert (sigma() * sigma()).is_zero()
        assert not sigma().is_zero()


def test_rooteps_squared_is_eps():
    assert rooteps() * rooteps() == eps()
    assert rooteps() * eps(-1) == rooteps(-1)


def test_division_by_scalar_monomial():
    assert (small(3) * amp() * const(6)) / (small(1) * const(3)) == small(2) * amp() * const(2)


# -- trigonometric linearisation ---------------------------------------------------

def test_sin_cubed():
    assert sin(1) ** 3 == sin(1) * const(Fraction(3, 4)) - sin(3) * const(Fraction(1, 4))


def test_sin_squared_sin2():
    e = sin(1) * sin(1) * sin(2)
    assert e == sin(2) * const(Fraction(1, 2)) - sin(4) * const(Fraction(1, 4))


def test_triple_product_against_quadrature():
    e = sin(1) * sin(2) * sin(3)
    want = sin(2) * const(Fraction(1, 4)) + sin(4) * const(Fraction(1, 4)) - sin(6) * const(Fraction(1, 4))
    assert e == want
    f = np.sin(XQ) * np.sin(2 * XQ) * np.sin(3 * XQ)
    for m in range(1, 9):
        assert project(f, m) == pytest.approx(project(sine_profile(e), m), abs=1e-10)


def test_even_products_are_rejected():
    with pytest.raises(TrigError):
        trig_combine(sin(1) * sin(2))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=4).filter(lambda ms: len(ms) % 2 == 1))
def test_trig_products_preserve_projections(modes):
    e = const(1)
    f = np.ones_like(XQ)
    for m in modes:
        e = e * sin(m)
        f = f * np.sin(m * XQ)
    e = trig_combine(e)
    assert trig_combine(e) == e
    for m in range(1, sum(modes) + 2):
        assert project(sine_profile(e), m) == pytest.approx(project(f, m), abs=1e-10)


# -- canonical forms -----------------------------------------------------------------

_atoms = st.sampled_from([
    amp(), lam(), sigma(), rooteps(), eps(), small(1), sin(1), sin(2), sin(3),
    phi(1), phi(2), const(Fraction(1, 3)), const(-2),
])


@st.composite
def expressions(draw):
    total = Expression()
    for _ in range(draw(st.integers(0, 4))):
        term = const(draw(st.fractions(min_value=-5, max_value=5, max_denominator=7)))
        for atom in draw(st.lists(_atoms, max_size=3)):
            term = term * atom
        total = total + term
    return total


@settings(max_examples=80, deadline=None)
@given(expressions(), expressions(), expressions())
def test_ring_laws(e1, e2, e3):
    assert (e1 + e2) + e3 == e1 + (e2 + e3)
    assert e1 * e2 == e2 * e1
    assert (e1 * e2) * e3 == e1 * (e2 * e3)
    assert e1 * (e2 + e3) == e1 * e2 + e1 * e3
    assert (e1 - e1).is_zero()


@settings(max_examples=80, deadline=None)
@given(expressions(), expressions(), st.integers(1, 4))
def test_truncation_is_a_congruence(e1, e2, k):
    full = e1 * e2
    with truncation(k):
        lhs = e1 * e2
        rhs = e1.truncate(k) * e2.truncate(k)
    assert lhs == rhs == full.truncate(k)


# -- Taylor series -------------------------------------------------------------------------

def test_sin_series_of_zero():
    assert sin_series(Expression()).is_zero()


def test_sin_series_low_order():
    u = small() * amp() * sin(1)
    with truncation(4):
        s = sin_series(u)
    want = u - small(3) * amp(3) * (sin(1) * const(Fraction(3, 4)) - sin(3) * const(Fraction(1, 4))) * const(Fraction(1, 6))
    assert s == want


def test_cubic_coefficient_at_bifurcation():
    u = small() * amp() * sin(1)
    with truncation(6):
        s = sin_series(u) * const(Fraction(3, 2))
    c = coeffn(coeffn(coeffn(s, "small", 3), "a", 3), "sigma", 0)
    assert c.filter(lambda k: k[5] == 1) == sin(1) * const(Fraction(-3, 16))


@pytest.mark.parametrize("mode", [1, 2, 3])
def test_sin_series_matches_numpy(mode):
    h, x = 0.1, 1.0
    u = small() * amp() * sin(mode)
    with truncation(12):
        s = sin_series(u)
    val = 0.0
    for t in s:
        val += float(t.coeff) * h ** t.grading.small_pow * math.sin(t.mode * x)
    uval = h * math.sin(mode * x)
    assert abs(val - math.sin(uval)) <= abs(uval) ** 9 / math.factorial(9) * 2 + 1e-16


# -- coefficient extraction -------------------------------------------------------------

def test_coeffn_examples():
    e = lam() * amp() - amp(3) * const(Fraction(3, 16))
    assert coeffn(e, "a", 3) == const(Fraction(-3, 16))
    assert coeffn(e, "sigma", 3).is_zero()
    c = sin(2) * phi(2)
    assert coeffn(sigma(2) * amp() * c, "sigma", 2) == amp() * c


def test_set_small_one_merges():
    assert set_small_one(small(2) * lam() * amp()) == lam() * amp()
    e = small() * rooteps() * sigma() * phi(1) + small(3) * rooteps() * sigma() * const(5)
    assert set_small_one(e) == rooteps() * sigma() * (phi(1) + const(5))
