from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superslow.convolution import (
    GEOM_TERMS,
    PHI,
    WhiteNoiseDerivativeError,
    d_dt,
    fast,
    geom,
    linearize_mixed,
    phi,
    phi_factor,
    psi,
    slow,
    zz,
)
from superslow.exprcore import Expression, amp, const, eps, lam, sin, small, truncation

A2, A3 = Fraction(27, 10), Fraction(38, 5)


def test_rates_must_be_positive():
    with pytest.raises(ValueError):
        slow(0)
    with pytest.raises(ValueError):
        fast(-1)


def test_d_dt_slow_convolution():
    assert d_dt(phi(2, [slow(A2)])) == phi(2) - phi(2, [slow(A2)]) * A2


def test_d_dt_nested_convolution_peels_head():
    e = phi(1, [slow(A3), slow(A2)])
    assert d_dt(e) == phi(1, [slow(A2)]) - e * A3


def test_d_dt_zz():
    pair = (phi_factor(1), phi_factor(3, [slow(A3)]))
    z = zz(pair, [slow(2)])
    assert d_dt(z) == zz(pair, []) - z * 2
    assert zz(pair, []) == phi(1) * phi(3, [slow(A3)])


def test_d_dt_amplitude_chain_rule():
    g = lam() * amp() - amp(3) * Fraction(3, 16)
    assert d_dt(amp() * sin(1), g) == g * sin(1)
    assert d_dt(amp(2) * sin(3), g) == amp() * g * sin(3) * 2


def test_d_dt_fast_rate_carries_small_bookkeeping():
    e = phi(1, [fast(2)])
    # bare fast convolution is O(small); its derivative loses one power
    # from the source term and two from the decay term
    assert d_dt(e) == phi(1).shift(small=-1) - (e * eps(-1) * 2).shift(small=-2)


def test_white_noise_has_no_derivative():
    with pytest.raises(WhiteNoiseDerivativeError):
        d_dt(phi(2))
    with pytest.raises(WhiteNoiseDerivativeError):
        d_dt(psi(1, 1, [slow(A3)]))


_noises = st.sampled_from([
    phi(1, [slow(A2)]), phi(2, [slow(A3), slow(A2)]), phi(3, [slow(A3)]),
    amp(), amp(2), lam(), sin(1), sin(2), const(Fraction(2, 3)),
])


@st.composite
def smooth_expressions(draw):
    total = Expression()
    for _ in range(draw(st.integers(1, 3))):
        term = const(draw(st.integers(-3, 3)))
        for f in draw(st.lists(_noises, max_size=2)):
            term = term * f
        total = total + term
    return total


@settings(max_examples=60, deadline=None)
@given(smooth_expressions(), smooth_expressions())
def test_d_dt_is_a_derivation(e1, e2):
    g = lam() * amp() - amp(3) * Fraction(3, 16)
    assert d_dt(e1 * e2, g) == d_dt(e1, g) * e2 + e1 * d_dt(e2, g)


def test_geom_examples():
    assert geom(Fraction(7, 3), 0) == const(1)
    assert geom(Fraction(1, 2), 2) == const(1) + small(2) * Fraction(1, 2) + small(4) * Fraction(1, 4)
    assert GEOM_TERMS == 9
    assert len(geom(Fraction(1, 3))) == 10
    with pytest.raises(ValueError):
        geom(1, -1)


def test_linearize_mixed_against_hand_series():
    with truncation(8):
        got = phi(2, [slow(A2), fast(5)])
        series = sum((Expression.monomial((A2 / 5) ** n, small=2 * n, e2=2 * n) for n in range(10)),
                     Expression())
        want = (phi(2, [slow(A2)]) - small() * Expression.monomial(1, noise=(phi_factor(2, [fast(5)]),))) \
            * series * eps() * Fraction(1, 5)
    assert got == want
    assert not any(f[0] == PHI and len(f[2]) > 1 for t in got for f in t.noise)


def test_linearize_mirror_order_is_identical():
    with truncation(8):
        assert phi(2, [fast(5), slow(A2)]) == phi(2, [slow(A2), fast(5)])


def test_same_timescale_is_untouched():
    p = [slow(A3), slow(A2)]
    assert linearize_mixed(1, p) == Expression.monomial(1, noise=(phi_factor(1, p),))


def test_linearize_with_remainder_uses_small_squared():
    with truncation(5):
        got = phi(1, [slow(A2), fast(2), slow(A3)])
    # the fast branch keeps a slow remainder, so it costs small^2 and is
    # itself mixed; splitting it again leaves a bare fast convolution
    want = (phi(1, [slow(A2), slow(A3)]) * (const(Fraction(1, 2)) + small(2) * eps() * Fraction(27, 40))
            - phi(1, [slow(A3)]) * small(2) * eps() * Fraction(1, 4)
            + phi(1, [fast(2)]) * small(3) * eps() * Fraction(1, 4)) * eps()
    assert got.filter(lambda k: k[0] <= 3) == want
