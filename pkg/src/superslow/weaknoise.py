"""Long-time equivalent noises for quadratic noise terms.

A product ``phi_i * Z phi_j`` of white noise with a convolved white noise
is, over long times, statistically equivalent to a mean drift plus a new
white noise ``psi``.  After the replacement the amplitude equation has a
drift part and independent fluctuating parts whose root-sum-square gives an
effective volatility.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .convolution import PHI, PSI, format_factor, psi
from .exprcore import A, E2, LAM, NOISE, SIG, SMALL, SURD, TRIG, Expression, coeffn, const, set_small_one
from .render import to_numeric_text

__all__ = [
    "NonCanonicalNoiseError",
    "long_transform",
    "sumsq_psi",
    "Volatility",
    "WeakModel",
    "extract_coeffs",
    "weak_model",
]


class NonCanonicalNoiseError(ValueError):
    """A quadratic noise not of the form ``phi(i,{}) * phi(j, p)`` with ``|p| <= 2``."""


def _inv_sqrt2(k: Fraction) -> Expression:
    # 1/sqrt(2k) = sqrt(2 p q) / (2 p) for k = p/q
    p, q = k.numerator, k.denominator
    if p <= 0:
        raise ValueError("convolution rate must be positive")
    return Expression.monomial(Fraction(1, 2 * p), surd=2 * p * q)


def _long_rule(noise: tuple) -> Expression:
    if not noise:
        return const(1)
    if any(f[0] != PHI for f in noise):
        if all(f[0] == PSI for f in noise):
            return Expression.monomial(1, noise=noise)
        raise NonCanonicalNoiseError("cannot transform " + "*".join(map(format_factor, noise)))
    if len(noise) == 1:
        if noise[0][2]:
            raise NonCanonicalNoiseError(f"linear noise with memory: {format_factor(noise[0])}")
        return Expression.monomial(1, noise=noise)
    if len(noise) == 2:
        bare = [f for f in noise if not f[2]]
        conv = [f for f in noise if f[2]]
        if len(bare) == 1 and len(conv) == 1:
            i, j, p = bare[0][1][0], conv[0][1][0], conv[0][2]
            if any(r.fast for r in p):
                raise NonCanonicalNoiseError(f"fast convolution in {format_factor(conv[0])}")
            if len(p) == 1:
                k = p[0].value
                drift = const(Fraction(1, 2)) if i == j else Expression()
                return drift + psi(i, j, p) * _inv_sqrt2(k)
            if len(p) == 2:
                k2, k1 = p[0].value, p[1].value
                return (psi(i, j, (p[1],)) * _inv_sqrt2(k1)
                        + psi(i, j, p) * _inv_sqrt2(k2)) * const(1 / (k1 + k2))
    raise NonCanonicalNoiseError("cannot transform " + "*".join(map(format_factor, noise)))


def long_transform(g: Expression) -> Expression:
    """Replace each quadratic noise by its long-time drift and ``psi`` noise.

    Linear noises ``phi(i,{})`` and noise-free terms pass through unchanged.
    Coefficients ``1/sqrt(2k)`` are kept as exact surds.
    """
    out = Expression()
    groups: dict[tuple, dict] = {}
    for k, c in g.items():
        if k[TRIG] != 0:
            raise NonCanonicalNoiseError("expected an amplitude equation without spatial factors")
        scal = k[:NOISE] + ((),) + k[SURD:]
        groups.setdefault(k[NOISE], {})[scal] = c
    for noise, scal in groups.items():
        out = out + Expression(scal) * _long_rule(noise)
    return out


def _scalar_key(k: tuple) -> tuple:
    return k[:NOISE] + ((),) + k[SURD:]


def sumsq_psi(e: Expression) -> Expression:
    """Sum of squared coefficients of the distinct ``psi`` noises.

    Equivalent to squaring ``e`` and keeping only the ``psi**2`` terms, each
    replaced by one: constants, single ``psi`` factors and cross products of
    different noises all vanish.
    """
    per_psi: dict[tuple, dict] = {}
    for k, c in e.items():
        noise = k[NOISE]
        if not noise:
            continue
        if len(noise) != 1 or noise[0][0] != PSI:
            raise NonCanonicalNoiseError("sumsq_psi expects terms linear in a single psi noise")
        per_psi.setdefault(noise, {})[_scalar_key(k)] = c
    total = Expression()
    for scal in per_psi.values():
        coeff = Expression(scal)
        total = total + coeff * coeff
    return total


@dataclass(frozen=True)
class Volatility:
    """``prefactor * sqrt(radicand)``; the prefactor holds whole powers of eps."""

    prefactor: Expression
    radicand: Expression

    def is_zero(self) -> bool:
        return self.radicand.is_zero()

    def to_text(self) -> str:
        if self.is_zero():
            return "0"
        pre = to_numeric_text(self.prefactor)
        return f"({to_numeric_text(self.radicand)})**0.5*{pre}"

    def radicand_values(self) -> dict[tuple[int, int], float]:
        """Numeric radicand coefficients keyed by ``(lam power, eps power)``."""
        out = {}
        for k, c in self.radicand.items():
            out[(k[LAM], k[E2] // 2)] = float(c)
        return out


def _root(sq: Expression) -> Volatility:
    if sq.is_zero():
        return Volatility(Expression(), Expression())
    for k in sq.keys():
        if k[SURD] != 1 or k[NOISE] or k[A] or k[TRIG] or k[SIG] or k[SMALL]:
            raise ValueError("radicand must be a polynomial in eps and lam")
    # pull out eps^(2j), taking sqrt(eps^2) = eps since eps > 0
    lowest = min(k[E2] for k in sq.keys())
    pulled = (lowest // 4) * 4
    rad = sq.shift(e2=-pulled) if pulled else sq
    return Volatility(Expression.monomial(1, e2=pulled // 2), rad)


@dataclass(frozen=True)
class WeakModel:
    gg: Expression
    c20: Volatility
    c21mean: Expression
    c21: Volatility

    def summary(self) -> dict[str, str]:
        return {
            "gg": to_numeric_text(self.gg),
            "c20": self.c20.to_text(),
            "c21mean": to_numeric_text(self.c21mean),
            "c21": self.c21.to_text(),
        }


def _drop_psi(e: Expression) -> Expression:
    return e.filter(lambda k: not k[NOISE])


def extract_coeffs(gg: Expression) -> tuple[Volatility, Expression, Volatility]:
    """Noise coefficients of ``sigma^2`` and ``sigma^2 a`` in the weak model.

    Returns the fluctuation volatility at ``a^0``, the drift at ``a^1`` and
    the fluctuation volatility at ``a^1``.
    """
    s2 = coeffn(gg, "sigma", 2)
    c20 = _root(sumsq_psi(coeffn(s2, "a", 0)))
    lin = coeffn(s2, "a", 1)
    return c20, _drop_psi(lin), _root(sumsq_psi(lin))


def weak_model(g: Expression) -> WeakModel:
    """Set ``small = 1``, transform the quadratic noises and extract coefficients."""
    gg = long_transform(set_small_one(g))
    c20, c21mean, c21 = extract_coeffs(gg)
    return WeakModel(gg, c20, c21mean, c21)
