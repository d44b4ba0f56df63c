"""Algebra of convolved noises.

Three kinds of noise factor appear in expressions, each an ordered tuple
``(kind, indices, convs)`` so that sorting gives the canonical order
phi < zz < psi, then by indices, then by convolution list:

``phi``  ``(0, (n,), convs)``
    ``exp(-r1 t) * exp(-r2 t) * ... * phi_n(t)``; ``phi(n, ())`` is white noise.
``zz``   ``(1, (f1, f2), convs)``
    the same stack of exponential smoothings applied to a product of two
    phi factors.
``psi``  ``(2, (i, j), convs)``
    new independent noise produced by the long-time transform.

Convolution lists hold :class:`Rate` values, outermost first.  A fast rate
``Rate(b, True)`` stands for the rate ``b/eps``.  Because a convolution on
the fast scale hides powers of ``sqrt(eps)``, every operation that creates or
removes one adjusts the ordering parameter ``small``:

* a lone fast convolution of a bare noise is worth ``small``;
* each further fast convolution is worth ``small**2``;
* slow convolutions are worth nothing.

Products such as ``Z_a Z_{b/eps}`` whose two leading rates live on different
timescales are split into differences of single-scale convolutions as soon
as they are formed (see :func:`linearize_mixed`).
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

from .exprcore import (
    NOISE,
    Expression,
    current_truncation,
    small,
)

__all__ = [
    "Rate",
    "slow",
    "fast",
    "PHI",
    "ZZ",
    "PSI",
    "phi_factor",
    "zz_factor",
    "psi_factor",
    "phi",
    "zz",
    "psi",
    "rate_expr",
    "inv_rate_expr",
    "geom",
    "linearize_mixed",
    "is_mixed",
    "d_dt",
    "WhiteNoiseDerivativeError",
    "nonsecular_linear",
    "secular_quadratic",
    "nonsecular_quadratic",
    "nonsecular_product",
    "format_factor",
    "fast_count",
]

PHI, ZZ, PSI = 0, 1, 2

#: number of terms kept in the geometric series 1/(1 - r small^2)
GEOM_TERMS = 9


class Rate(NamedTuple):
    value: Fraction
    fast: bool = False

    def __str__(self) -> str:
        v = _frac_str(self.value)
        return f"{v}/eps" if self.fast else v


def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def slow(q) -> Rate:
    q = Fraction(q)
    if q <= 0:
        raise ValueError(f"convolution rate must be positive, got {q}")
    return Rate(q, False)


def fast(q) -> Rate:
    q = Fraction(q)
    if q <= 0:
        raise ValueError(f"convolution rate must be positive, got {q}")
    return Rate(q, True)


def phi_factor(n: int, convs: Sequence[Rate] = ()) -> tuple:
    return (PHI, (n,), tuple(convs))


def zz_factor(inner: Sequence[tuple], convs: Sequence[Rate]) -> tuple:
    inner = tuple(sorted(inner))
    if len(inner) != 2 or any(f[0] != PHI for f in inner):
        raise ValueError("zz only wraps a product of exactly two phi factors")
    if any(r.fast for r in convs):
        raise ValueError("zz convolutions must be on the slow timescale")
    return (ZZ, inner, tuple(convs))


def psi_factor(i: int, j: int, convs: Sequence[Rate]) -> tuple:
    return (PSI, (i, j), tuple(convs))


def format_factor(f: tuple, latex: bool = False) -> str:
    kind, idx, convs = f
    if latex:
        return _latex_factor(f)
    p = "{" + ",".join(str(r) for r in convs) + "}"
    if kind == PHI:
        return f"phi({idx[0]},{p})"
    if kind == PSI:
        return f"psi({idx[0]},{idx[1]},{p})"
    return f"zz({format_factor(idx[0])}*{format_factor(idx[1])},{p})"


def _latex_rate(r: Rate) -> str:
    v = r.value
    s = str(v.numerator) if v.denominator == 1 else rf"\frac{{{v.numerator}}}{{{v.denominator}}}"
    return rf"{s}/\epsilon" if r.fast else s


def _latex_factor(f: tuple) -> str:
    kind, idx, convs = f
    ops = "".join(rf"Z_{{{_latex_rate(r)}}}" for r in convs)
    if kind == PHI:
        return rf"{ops}\phi_{{{idx[0]}}}"
    if kind == PSI:
        return rf"\psi_{{{idx[0]}{idx[1]},({','.join(_latex_rate(r) for r in convs)})}}"
    return rf"{ops}[{_latex_factor(idx[0])}{_latex_factor(idx[1])}]"


def fast_count(f: tuple) -> int:
    return sum(r.fast for r in f[2])


# -- scalar helpers ------------------------------------------------------------

def rate_expr(r: Rate) -> Expression:
    """The rate as a multiplier: ``b`` or ``b/eps``."""
    return Expression.monomial(r.value, e2=-2 if r.fast else 0)


def inv_rate_expr(r: Rate) -> Expression:
    return Expression.monomial(1 / r.value, e2=2 if r.fast else 0)


def _ratio(num: Rate, den: Rate) -> Expression:
    return Expression.monomial(num.value / den.value, e2=2 * (den.fast - num.fast))


def geom(r, n_terms: int = GEOM_TERMS) -> Expression:
    """Truncated geometric series ``sum_{k=0}^{n_terms} (r small^2)^k``."""
    if n_terms < 0:
        raise ValueError("number of terms must be non-negative")
    step = Expression.coerce(r) * small(2)
    total = Expression.monomial(1)
    power = Expression.monomial(1)
    for _ in range(n_terms):
        power = power * step
        if power.is_zero():
            break
        total = total + power
    return total


# -- normalised constructors ---------------------------------------------------

def is_mixed(convs: Sequence[Rate]) -> bool:
    return len(convs) > 1 and convs[0].fast != convs[1].fast


def phi(n: int, convs: Sequence[Rate] = ()) -> Expression:
    """Convolved noise with any mixed-timescale head split apart."""
    convs = tuple(convs)
    if is_mixed(convs):
        return linearize_mixed(n, convs)
    return Expression.monomial(1, noise=(phi_factor(n, convs),))


def linearize_mixed(n: int, convs: Sequence[Rate]) -> Expression:
    """Split ``Z_a Z_{b/eps}`` (either order) at the head of a convolution list.

    Uses ``Z_a Z_{b/eps} = (eps/b)/(1 - eps a/b) [Z_a - Z_{b/eps}]`` with the
    geometric series truncated by ``small``.  The fast branch carries
    ``small`` when what remains beneath it is empty or fast, ``small**2``
    otherwise.  Lists whose first two rates share a timescale are returned
    unchanged.
    """
    convs = tuple(convs)
    if not is_mixed(convs):
        return Expression.monomial(1, noise=(phi_factor(n, convs),))
    return _linearize_cached(current_truncation(), n, convs)


@lru_cache(maxsize=None)
def _linearize_cached(_tr, n: int, convs: tuple) -> Expression:
    first, second, rest = convs[0], convs[1], convs[2:]
    slow_rate, fast_rate = (first, second) if second.fast else (second, first)
    weight = small(1) if (not rest or rest[0].fast) else small(2)
    split = phi(n, (slow_rate,) + rest) - phi(n, (fast_rate,) + rest) * weight
    return split * geom(_ratio(slow_rate, fast_rate)) * inv_rate_expr(fast_rate)


def zz(inner: Sequence[tuple], convs: Sequence[Rate]) -> Expression:
    """Convolution of a product of two phi factors; ``zz(P, ()) = P``."""
    inner = tuple(sorted(inner))
    if not convs:
        return Expression.monomial(1, noise=inner)
    return Expression.monomial(1, noise=(zz_factor(inner, convs),))


def psi(i: int, j: int, convs: Sequence[Rate]) -> Expression:
    return Expression.monomial(1, noise=(psi_factor(i, j, convs),))


# -- time derivative -------------------------------------------------------------

class WhiteNoiseDerivativeError(ValueError):
    """Raised when asked to differentiate bare white noise."""


@lru_cache(maxsize=None)
def _factor_derivative(_tr, f: tuple) -> Expression:
    kind, idx, convs = f
    if kind == PSI:
        raise WhiteNoiseDerivativeError(f"cannot differentiate {format_factor(f)}")
    if not convs:
        raise WhiteNoiseDerivativeError(f"cannot differentiate white noise {format_factor(f)}")
    head, rest = convs[0], convs[1:]
    self_ = Expression.monomial(1, noise=(f,))
    tail = phi(idx[0], rest) if kind == PHI else zz(idx, rest)
    if not head.fast:
        return tail - rate_expr(head) * self_
    if kind == ZZ:
        raise ValueError("zz convolution on the fast timescale")
    return (tail.shift(small=-1 if not rest else -2)
            - (rate_expr(head) * self_).shift(small=-2))


def d_dt(e: Expression, g: Expression | None = None) -> Expression:
    """Time derivative, with ``da/dt = g`` for the amplitude.

    Each noise factor contributes ``-r1 Z + Z_rest`` for its leading rate;
    fast leading rates come with the ``small`` bookkeeping described in the
    module docstring.
    """
    tr = current_truncation()
    pieces: list[Expression] = []
    for key, c in e.items():
        s, e2, sg, lm, a, t, noise, r = key
        if a and g is not None and not g.is_zero():
            rest = Expression({(s, e2, sg, lm, a - 1, t, noise, r): c * a})
            pieces.append(rest * g)
        for i, f in enumerate(noise):
            others = noise[:i] + noise[i + 1:]
            rest = Expression({(s, e2, sg, lm, a, t, others, r): c})
            pieces.append(rest * _factor_derivative(tr, f))
    return _sum(pieces)


def _sum(pieces) -> Expression:
    out: dict = {}
    for p in pieces:
        for k, c in p.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                del out[k]
    return Expression(out)


# -- integration by parts ----------------------------------------------------------
#
# All of these memoise on the active truncation because their results are
# truncated series.

def _grade_same(r: Rate, power: int) -> Expression:
    return small(power) if r.fast else Expression.monomial(1)


@lru_cache(maxsize=None)
def _nonsecular_linear(_tr, n: int, p: tuple) -> Expression:
    if not p:
        return Expression()
    head = p[0]
    lead = phi(n, p) * _grade_same(head, 2)
    return (_nonsecular_linear(_tr, n, p[1:]) - lead) * inv_rate_expr(head)


def nonsecular_linear(n: int, p: Sequence[Rate]) -> Expression:
    """Solve ``dw/dt = phi(n, p) - <secular part>`` without memory terms.

    Returns the update ``w`` such that the fluctuating part of a critical
    mode forcing is absorbed into the field, leaving only ``phi(n, ())``
    times the product of reciprocal rates for the evolution.
    """
    return _nonsecular_linear(current_truncation(), n, tuple(p))


def _sum_rate(p0: Rate, q0: Rate) -> Expression:
    # same timescale only
    return Expression.monomial(1 / (p0.value + q0.value), e2=2 if p0.fast else 0)


@lru_cache(maxsize=None)
def _secular_quadratic(_tr, n: int, p: tuple, m: int, q: tuple) -> Expression:
    if not p or not q:
        return phi(n, p) * phi(m, q)
    p0, q0 = p[0], q[0]
    if p0.fast == q0.fast:
        total = (_secular_quadratic(_tr, n, p[1:], m, q)
                 + _secular_quadratic(_tr, n, p, m, q[1:]))
        return total * _sum_rate(p0, q0) * _grade_same(p0, 2)
    if p0.fast:
        first = _secular_quadratic(_tr, n, p[1:], m, q) * small(1 if not p[1:] else 2)
        second = _secular_quadratic(_tr, n, p, m, q[1:]) * small(2)
        return (first + second) * inv_rate_expr(p0) * geom(-_ratio(q0, p0))
    return _secular_quadratic(_tr, m, q, n, p)


def secular_quadratic(n: int, p: Sequence[Rate], m: int, q: Sequence[Rate]) -> Expression:
    """Reduce the resonant part of ``phi(n,p) phi(m,q)`` to canonical form.

    Integration by parts moves every convolution onto a single noise of the
    product, so the result only holds products ``phi(n,()) phi(m, ...)``.
    """
    return _secular_quadratic(current_truncation(), n, tuple(p), m, tuple(q))


@lru_cache(maxsize=None)
def _nonsecular_quadratic(_tr, n: int, p: tuple, m: int, q: tuple) -> Expression:
    if not p or not q:
        return Expression()
    p0, q0 = p[0], q[0]
    if p0.fast == q0.fast:
        lead = phi(n, p) * phi(m, q) * _grade_same(p0, 2)
        total = (-lead + _nonsecular_quadratic(_tr, n, p[1:], m, q)
                 + _nonsecular_quadratic(_tr, n, p, m, q[1:]))
        return total * _sum_rate(p0, q0)
    if p0.fast:
        lead = phi(n, p) * phi(m, q) * small(2)
        total = (-lead
                 + _nonsecular_quadratic(_tr, n, p[1:], m, q) * small(1 if not p[1:] else 2)
                 + _nonsecular_quadratic(_tr, n, p, m, q[1:]) * small(2))
        return total * inv_rate_expr(p0) * geom(-_ratio(q0, p0))
    return _nonsecular_quadratic(_tr, m, q, n, p)


def nonsecular_quadratic(n: int, p: Sequence[Rate], m: int, q: Sequence[Rate]) -> Expression:
    """Field update absorbing the integrable part of ``phi(n,p) phi(m,q)``."""
    return _nonsecular_quadratic(current_truncation(), n, tuple(p), m, tuple(q))


def nonsecular_product(inner: Sequence[tuple], p: Sequence[Rate]) -> Expression:
    """Field update for a convolved product ``zz(inner, p)`` on the critical mode."""
    p = tuple(p)
    if not p:
        return Expression()
    return (nonsecular_product(inner, p[1:]) - zz(inner, p)) * inv_rate_expr(p[0])


def noise_of(key: tuple) -> tuple:
    return key[NOISE]
