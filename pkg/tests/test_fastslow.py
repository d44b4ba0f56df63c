from fractions import Fraction

import pytest

from listings import fastslow_gssm
from superslow.averaged import noise_forcing
from superslow.convolution import ZZ, fast, phi, slow
from superslow.exprcore import (
    Expression,
    amp,
    coeffn,
    eps,
    rooteps,
    set_small_one,
    sigma,
    sin,
    small,
    truncation,
)
from superslow.fastslow import (
    FastSlowState,
    apply_u_update,
    beta,
    residual_u,
    residual_v,
    slow_limit,
    uuinv,
    uvinv,
    vuinv,
    vvinv,
)
from superslow.model import UnmatchedTermError

A2, A3 = Fraction(27, 10), Fraction(38, 5)


def test_beta():
    assert [beta(m) for m in (1, 2, 3)] == [2, 5, 10]


def test_initial_v_residual():
    s = FastSlowState()
    res = residual_v(s.u, s.v, s.g, noise_forcing(3))
    assert res.filter(lambda k: not k[6]).is_zero()
    # sigma carries no small weight in this system
    noisy = small() * rooteps() * sigma()
    assert res.filter(lambda k: k[5] == 1) == noisy * phi(1) * sin(1)
    assert res.filter(lambda k: k[5] == 2) == noisy * phi(2) * sin(2)


def test_initial_u_residual():
    s = FastSlowState()
    res = residual_u(s.u, s.v, s.g)
    assert res.filter(lambda k: k[0] == 1).is_zero()
    cubic = res.filter(lambda k: k[0] == 3 and k[5] == 1 and k[3] == 0)
    assert cubic == small(3) * amp(3) * sin(1) * Fraction(-3, 16)


def test_v_update_rough_noise():
    with truncation(8):
        r = small(2) * phi(1) * sin(1)
        assert vvinv(r) == small() * phi(1, [fast(2)]) * sin(1) * eps(-1)
        assert uvinv(r) == small(3) * phi(1, [fast(2)]) * sin(1) * Fraction(1, 2)


def test_v_update_smooth_noise():
    r = phi(2, [slow(A2)]) * sin(2)
    assert vvinv(r) == r * Fraction(1, 5)
    assert uvinv(r).is_zero()


def test_v_update_deterministic():
    assert vvinv(sin(3)) == sin(3) * ((A3 - Fraction(1, 10)) / (A3 * 10))
    assert uvinv(sin(3)) == sin(3) * Fraction(-1, 76)


def test_u_update_rules():
    assert uuinv(sin(3)) == sin(3) * Fraction(5, 38)
    assert vuinv(sin(3)) == sin(3) * Fraction(1, 76)
    assert uuinv(sin(2) * phi(2)) == phi(2, [slow(A2)]) * sin(2)
    assert vuinv(sin(2) * phi(2)) == phi(2, [slow(A2)]) * sin(2) * Fraction(1, 5)
    k = Fraction(3)
    crit = sin(1) * phi(1, [slow(k)])
    assert vuinv(crit) == uuinv(crit) * Fraction(1, 2)
    with pytest.raises(UnmatchedTermError):
        uuinv(sin(1))


def test_apply_u_update_moves_secular_part_into_g():
    s = FastSlowState()
    resu = small(3) * amp(3) * sin(1) * Fraction(-3, 16) + small(3) * amp(3) * sin(3)
    apply_u_update(s, resu)
    assert s.g == small(2) * amp(3) * Fraction(-3, 16)
    assert s.u.filter(lambda k: k[5] == 3) == small(3) * amp(3) * sin(3) * Fraction(5, 38)


def test_sweep_history(fastslow_model):
    m = fastslow_model
    assert m.iterations == 8
    assert m.history[-1] == (0, 0)
    assert (0, 0) in m.history[:-1]


def test_deterministic_and_linear_noise(fastslow_model):
    g = fastslow_model.gssm

    def c(expr, **pw):
        for var, p in pw.items():
            expr = coeffn(expr, var, p)
        return expr

    det = c(g, sigma=0)
    # the reference listing prints 1/4*a*eps*lam (first power of lam)
    assert c(det, a=1, lam=1, eps=1) == Expression.monomial(Fraction(1, 4))
    assert c(det, a=1, lam=2).is_zero()
    assert c(det, a=3, lam=0, eps=1) == Expression.monomial(Fraction(-3, 64))
    assert c(det, a=5, lam=0, eps=0) == Expression.monomial(Fraction(91, 9728))
    lin = c(g, sigma=1, rooteps=1)
    assert c(lin, a=0, lam=0, eps=0) == phi(1) * Fraction(-1, 2)
    assert c(lin, a=0, lam=0, eps=1) == phi(1) * Fraction(-1, 8)
    assert c(lin, a=0, lam=1, eps=1) == phi(1) * Fraction(1, 4)
    assert c(lin, a=2, lam=0, eps=1) == phi(1) * Fraction(-9, 64) + phi(3) * Fraction(-3, 4864)
    assert c(lin, a=2, lam=0, eps=0) == phi(3) * Fraction(-3, 1216)


def _noise_part(q: Expression, pattern: Expression) -> Expression:
    (key,) = pattern.keys()
    return q.filter(lambda k: k[6] == key[6])


def test_quadratic_noise_named_terms(fastslow_model):
    q = fastslow_model.gssm
    for var, p in (("sigma", 2), ("a", 1), ("eps", 1), ("rooteps", 0), ("lam", 0)):
        q = coeffn(q, var, p)
    for pair, c in ((phi(2) * phi(2, [slow(A2)]), Fraction(-1, 180)),
                    (phi(1) * phi(3, [slow(A3)]), Fraction(3, 1216)),
                    (phi(3) * phi(3, [slow(A3)]), Fraction(-3, 6080))):
        assert _noise_part(q, pair) == pair * c


def test_matches_reference_listing(fastslow_model):
    want = fastslow_gssm()
    got = fastslow_model.gssm
    assert len(want) == 41
    assert got == want


def test_fast_field_fluctuations(fastslow_model):
    v = set_small_one(fastslow_model.v)
    for n in (1, 2, 3):
        lead = v.filter(lambda k: k[1] == -1 and k[2] == 1 and k[4] == 0 and k[3] == 0 and k[5] == n
                        and k[6] == ((0, (n,), (fast(beta(n)),)),))
        assert lead == Expression.monomial(1, e2=-1, sigma=1, trig=n,
                                           noise=((0, (n,), (fast(beta(n)),)),))


def test_no_fast_zz(fastslow_model):
    for field in (fastslow_model.g, fastslow_model.u, fastslow_model.v):
        for t in field:
            for f in t.noise:
                if f[0] == ZZ:
                    assert not any(r.fast for r in f[2])


def test_slow_limit_equals_averaged(fastslow_model, averaged_model):
    assert slow_limit(fastslow_model.g) == averaged_model.g


def test_certificates(fastslow_model):
    m = fastslow_model
    noise = noise_forcing(m.noise_modes)
    assert residual_v(m.u, m.v, m.g, noise, m.trunc_order, 3).is_zero()
    assert residual_u(m.u, m.v, m.g, m.trunc_order, 3).is_zero()
