"""Canonical sparse expressions over the Dirichlet sine basis.

An :class:`Expression` is a finite sum of monomials

    coeff * sqrt(surd) * small^s * eps^(h/2) * sigma^k * lam^l * a^j
          * trig(x) * (noise factors)

with exact rational ``coeff``.  Half powers of ``eps`` are stored as a single
integer count ``h`` of ``sqrt(eps)`` factors, so ``rooteps^2 = eps`` holds by
construction and ``rooteps/eps`` is simply ``h = -1``.  The spatial factor
``trig`` is encoded as an integer: ``m > 0`` is ``sin(m x)``, ``m < 0`` is
``cos(|m| x)`` and ``0`` is the constant.  Products are linearised into this
basis as they are formed, so every expression is always trig-combined.

Noise factors are opaque, totally ordered tuples supplied by
:mod:`superslow.convolution`; here they are only concatenated and sorted.

Truncation in the ordering parameter ``small`` (and optionally in ``sigma``)
is controlled by the :func:`truncation` context manager and applied eagerly
to every product.
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from typing import Callable, Iterable, Iterator, NamedTuple

__all__ = [
    "Expression",
    "Grading",
    "Term",
    "TrigError",
    "truncation",
    "current_truncation",
    "trig_combine",
    "sin_series",
    "coeffn",
    "set_small_one",
    "small",
    "eps",
    "rooteps",
    "sigma",
    "lam",
    "amp",
    "sin",
    "const",
    "apply_linear",
]

# positions inside a term key
SMALL, E2, SIG, LAM, A, TRIG, NOISE, SURD = range(8)

_ONE = Fraction(1)
_HALF = Fraction(1, 2)


class TrigError(ValueError):
    """A cosine or spatially constant component where only sines are valid."""


@dataclass(frozen=True)
class Truncation:
    small: int | None = None
    sigma: int | None = None

    def keeps(self, s: int, k: int) -> bool:
        if self.small is not None and s >= self.small:
            return False
        if self.sigma is not None and k >= self.sigma:
            return False
        return True


_TRUNC: contextvars.ContextVar[Truncation] = contextvars.ContextVar(
    "superslow_truncation", default=Truncation()
)


def current_truncation() -> Truncation:
    return _TRUNC.get()


@contextlib.contextmanager
def truncation(small: int | None = None, sigma: int | None = None):
    """Drop terms with ``small**small`` (or ``sigma**sigma``) and beyond.

    Both bounds are exclusive: ``truncation(small=6)`` mirrors the rewrite
    rule ``small^6 => 0``.
    """
    token = _TRUNC.set(Truncation(small, sigma))
    try:
        yield
    finally:
        _TRUNC.reset(token)


@lru_cache(maxsize=None)
def _trig_product(t1: int, t2: int) -> tuple[tuple[int, Fraction], ...]:
    if t1 == 0:
        return ((t2, _ONE),)
    if t2 == 0:
        return ((t1, _ONE),)
    out: dict[int, Fraction] = {}

    def put(code: int, c: Fraction) -> None:
        out[code] = out.get(code, 0) + c

    def put_sin(m: int, c: Fraction) -> None:
        if m > 0:
            put(m, c)
        elif m < 0:
            put(-m, -c)

    def put_cos(m: int, c: Fraction) -> None:
        put(-abs(m), c)

    if t1 > 0 and t2 > 0:
        put_cos(t1 - t2, _HALF)
        put_cos(t1 + t2, -_HALF)
    elif t1 < 0 and t2 < 0:
        put_cos(t1 - t2, _HALF)
        put_cos(t1 + t2, _HALF)
    else:
        s, c = (t1, -t2) if t1 > 0 else (t2, -t1)
        put_sin(s + c, _HALF)
        put_sin(s - c, _HALF)
    return tuple((k, v) for k, v in sorted(out.items()) if v != 0)


def _squarefree(n: int) -> tuple[int, int]:
    """Split ``n = s**2 * r`` with ``r`` squarefree; return ``(s, r)``."""
    s, r = 1, n
    p = 2
    while p * p <= r:
        while r % (p * p) == 0:
            r //= p * p
            s *= p
        p += 1
    return s, r


def _surd_product(r1: int, r2: int) -> tuple[int, int]:
    if r1 == 1:
        return 1, r2
    if r2 == 1:
        return 1, r1
    g = gcd(r1, r2)
    return g, (r1 // g) * (r2 // g)


class Grading(NamedTuple):
    small_pow: int
    eps_pow: int
    rooteps_pow: int
    sigma_pow: int
    lam_pow: int


class Term(NamedTuple):
    """Public, read-only view of one monomial."""

    coeff: Fraction
    grading: Grading
    a_pow: int
    mode: int
    noise: tuple
    surd: int = 1

    @property
    def is_sine(self) -> bool:
        return self.mode > 0


def _key_to_term(key: tuple, c: Fraction) -> Term:
    e2 = key[E2]
    grading = Grading(key[SMALL], e2 // 2, e2 % 2, key[SIG], key[LAM])
    return Term(c, grading, key[A], key[TRIG], key[NOISE], key[SURD])


def _mono_key(small=0, e2=0, sig=0, lam=0, a=0, trig=0, noise=(), surd=1) -> tuple:
    return (small, e2, sig, lam, a, trig, noise, surd)


class Expression:
    """Immutable canonical sum of monomials with exact rational coefficients."""

    __slots__ = ("_t",)

    def __init__(self, terms: dict | None = None):
        self._t: dict = terms if terms is not None else {}

    # -- construction ---------------------------------------------------
    @classmethod
    def monomial(cls, coeff=1, *, small=0, e2=0, sigma=0, lam=0, a=0,
                 trig=0, noise=(), surd=1) -> "Expression":
        c = Fraction(coeff)
        if c == 0:
            return cls()
        if surd != 1:
            s, surd = _squarefree(surd)
            c *= s
        noise = tuple(sorted(noise))
        key = (small, e2, sigma, lam, a, trig, noise, surd)
        if not current_truncation().keeps(small, sigma):
            return cls()
        return cls({key: c})

    @classmethod
    def from_terms(cls, items: Iterable[tuple[tuple, Fraction]]) -> "Expression":
        out: dict = {}
        for k, c in items:
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return cls(out)

    @staticmethod
    def coerce(x) -> "Expression":
        if isinstance(x, Expression):
            return x
        return Expression.monomial(x)

    # -- inspection -----------------------------------------------------
    def __len__(self) -> int:
        return len(self._t)

    def __bool__(self) -> bool:
        return bool(self._t)

    def __iter__(self) -> Iterator[Term]:
        for k in sorted(self._t, key=_sort_key):
            yield _key_to_term(k, self._t[k])

    def items(self):
        return self._t.items()

    def keys(self):
        return self._t.keys()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expression):
            try:
                other = Expression.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self._t == other._t

    def __hash__(self) -> int:
        return hash(frozenset(self._t.items()))

    def is_zero(self) -> bool:
        return not self._t

    def min_small(self) -> int | None:
        return min((k[SMALL] for k in self._t), default=None)

    # -- ring operations ------------------------------------------------
    def __add__(self, other) -> "Expression":
        other = Expression.coerce(other)
        if len(other._t) > len(self._t):
            big, little = other._t, self._t
        else:
            big, little = self._t, other._t
        out = dict(big)
        for k, c in little.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                del out[k]
        return Expression(out)

    __radd__ = __add__

    def __neg__(self) -> "Expression":
        return Expression({k: -c for k, c in self._t.items()})

    def __sub__(self, other) -> "Expression":
        return self + (-Expression.coerce(other))

    def __rsub__(self, other) -> "Expression":
        return Expression.coerce(other) + (-self)

    def __mul__(self, other) -> "Expression":
        if isinstance(other, Expression):
            return _mul(self, other, current_truncation())
        c = Fraction(other)
        if c == 0:
            return Expression()
        return Expression({k: v * c for k, v in self._t.items()})

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Expression":
        if isinstance(other, Expression):
            return self * other.inverse()
        return self * (1 / Fraction(other))

    def __pow__(self, n: int) -> "Expression":
        if n < 0:
            raise ValueError("negative powers only for monomials; use inverse()")
        result = Expression.monomial(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def inverse(self) -> "Expression":
        """Reciprocal of a scalar monomial (no trig, noise or surd)."""
        if len(self._t) != 1:
            raise ZeroDivisionError("only single-term expressions are invertible")
        (k, c), = self._t.items()
        if k[TRIG] != 0 or k[NOISE] or k[SURD] != 1:
            raise ZeroDivisionError("cannot invert spatial or noise factors")
        return Expression({(-k[SMALL], -k[E2], -k[SIG], -k[LAM], -k[A], 0, (), 1): 1 / c})

    def shift(self, small: int = 0, e2: int = 0) -> "Expression":
        """Multiply by ``small**small * rooteps**e2`` (truncating on the way up)."""
        tr = current_truncation()
        out = {}
        for k, c in self._t.items():
            s = k[SMALL] + small
            if small > 0 and not tr.keeps(s, k[SIG]):
                continue
            out[(s, k[E2] + e2) + k[2:]] = c
        return Expression(out)

    def truncate(self, small: int | None = None, sigma: int | None = None) -> "Expression":
        tr = Truncation(small, sigma) if (small, sigma) != (None, None) else current_truncation()
        return Expression({k: c for k, c in self._t.items() if tr.keeps(k[SMALL], k[SIG])})

    def filter(self, pred: Callable[[tuple], bool]) -> "Expression":
        return Expression({k: c for k, c in self._t.items() if pred(k)})

    def map_keys(self, fn: Callable[[tuple], tuple]) -> "Expression":
        return Expression.from_terms((fn(k), c) for k, c in self._t.items())

    # -- rendering --------------------------------------------------------
    def __repr__(self) -> str:
        return f"Expression({self})"

    def __str__(self) -> str:
        from .render import to_text

        return to_text(self)


def _sort_key(k: tuple):
    return (k[TRIG] <= 0, abs(k[TRIG]), k[SIG], k[NOISE], k[A], k[SMALL], k[E2], k[LAM], k[SURD])


def _mul(x: Expression, y: Expression, tr: Truncation) -> Expression:
    xt, yt = x._t, y._t
    if not xt or not yt:
        return Expression()
    if len(xt) < len(yt):
        xt, yt = yt, xt
    kmax = tr.small
    smax = tr.sigma
    ys = sorted(yt.items(), key=lambda kv: kv[0][SMALL])
    out: dict = {}
    get = out.get
    for k1, c1 in xt.items():
        s1, e1, g1, l1, a1, t1, n1, r1 = k1
        for k2, c2 in ys:
            s = s1 + k2[SMALL]
            if kmax is not None and s >= kmax:
                break
            g = g1 + k2[SIG]
            if smax is not None and g >= smax:
                continue
            n2 = k2[NOISE]
            if not n1:
                n = n2
            elif not n2:
                n = n1
            else:
                n = tuple(sorted(n1 + n2))
            c = c1 * c2
            r2 = k2[SURD]
            if r1 != 1 or r2 != 1:
                f, r = _surd_product(r1, r2)
                c *= f
            else:
                r = 1
            head = (s, e1 + k2[E2], g, l1 + k2[LAM], a1 + k2[A])
            for t, f in _trig_product(t1, k2[TRIG]):
                key = head + (t, n, r)
                v = get(key, 0) + c * f
                if v:
                    out[key] = v
                else:
                    del out[key]
    return Expression(out)


# -- symbols -----------------------------------------------------------------

def const(c) -> Expression:
    return Expression.monomial(c)


def small(p: int = 1) -> Expression:
    return Expression.monomial(1, small=p)


def eps(p: int = 1) -> Expression:
    return Expression.monomial(1, e2=2 * p)


def rooteps(p: int = 1) -> Expression:
    return Expression.monomial(1, e2=p)


def sigma(p: int = 1) -> Expression:
    return Expression.monomial(1, sigma=p)


def lam(p: int = 1) -> Expression:
    return Expression.monomial(1, lam=p)


def amp(p: int = 1) -> Expression:
    return Expression.monomial(1, a=p)


def sin(m: int) -> Expression:
    if m == 0:
        return Expression()
    if m < 0:
        return -Expression.monomial(1, trig=-m)
    return Expression.monomial(1, trig=m)


# -- operations ----------------------------------------------------------------

def trig_combine(e: Expression) -> Expression:
    """Check that ``e`` lies in the sine basis and return it.

    Products are linearised as they are built, so the only work left is the
    validation: a cosine or constant component means an even product slipped
    through and is reported as :class:`TrigError`.
    """
    for k, c in e.items():
        if k[TRIG] <= 0:
            what = "constant" if k[TRIG] == 0 else f"cos({-k[TRIG]}x)"
            raise TrigError(f"non-sine component {what} with coefficient {c}")
    return e


def sin_series(u: Expression) -> Expression:
    """Taylor polynomial of ``sin(u)`` through degree 7, trig-combined."""
    if u.is_zero():
        return Expression()
    u2 = u * u
    u3 = u2 * u
    u5 = u3 * u2
    u7 = u5 * u2
    return u - u3 * Fraction(1, 6) + u5 * Fraction(1, 120) - u7 * Fraction(1, 5040)


_VAR_SLOT = {"sigma": SIG, "a": A, "lam": LAM, "small": SMALL}


def coeffn(e: Expression, var: str, power: int) -> Expression:
    """Coefficient of ``var**power``; ``var`` in sigma, a, lam, small, eps, rooteps."""
    if var in _VAR_SLOT:
        i = _VAR_SLOT[var]
        return Expression(
            {k[:i] + (0,) + k[i + 1:]: c for k, c in e.items() if k[i] == power}
        )
    if var == "eps":
        return Expression(
            {k[:E2] + (k[E2] % 2,) + k[E2 + 1:]: c for k, c in e.items() if k[E2] // 2 == power}
        )
    if var == "rooteps":
        return Expression(
            {k[:E2] + (k[E2] - k[E2] % 2,) + k[E2 + 1:]: c for k, c in e.items() if k[E2] % 2 == power}
        )
    raise ValueError(f"unknown variable {var!r}")


def set_small_one(e: Expression) -> Expression:
    """Erase the ordering parameter once it has done its truncating job."""
    return Expression.from_terms(((0,) + k[1:], c) for k, c in e.items())


def apply_linear(e: Expression, rule: Callable[[int, tuple], Expression]) -> Expression:
    """Apply an operator that is linear over everything but space and noise.

    ``rule(trig, noise)`` gives the image of one basis element
    ``trig(x) * noise``; scalar factors (small, eps, sigma, lam, a and the
    coefficient) ride along and the products are truncated as usual.
    """
    groups: dict[tuple, dict] = {}
    for k, c in e.items():
        scal = (k[SMALL], k[E2], k[SIG], k[LAM], k[A], 0, (), k[SURD])
        groups.setdefault((k[TRIG], k[NOISE]), {})[scal] = c
    out: dict = {}
    for (t, noise), scal in groups.items():
        image = rule(t, noise)
        if image is None or image.is_zero():
            continue
        for k, c in (Expression(scal) * image).items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                del out[k]
    return Expression(out)
