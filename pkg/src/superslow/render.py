"""Text and LaTeX renderings of expressions."""
from __future__ import annotations

import math
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

from .convolution import format_factor
from .exprcore import A, E2, LAM, NOISE, SIG, SMALL, SURD, TRIG, Expression, _sort_key


def _pow(name: str, p: int, latex: bool) -> str:
    if p == 0:
        return ""
    if p == 1:
        return name
    if latex:
        return f"{name}^{{{p}}}"
    return f"{name}^{p}"


def _latex_eps(e2: int) -> str:
    if e2 == 0:
        return ""
    if e2 == 1:
        return r"\sqrt\epsilon"
    if e2 % 2 == 0:
        return _pow(r"\epsilon", e2 // 2, True)
    return rf"\epsilon^{{{e2}/2}}"


def _symbols(key: tuple, latex: bool) -> list[str]:
    e2 = key[E2]
    eps_p, root = e2 // 2, e2 % 2
    if latex:
        names = {"small": r"\delta", "eps": r"\epsilon", "sigma": r"\sigma", "lam": r"\lambda'", "a": "a"}
    else:
        names = {"small": "small", "eps": "eps", "sigma": "sigma", "lam": "lam", "a": "a"}
    out = []
    if key[SURD] != 1:
        out.append(rf"\sqrt{{{key[SURD]}}}" if latex else f"sqrt({key[SURD]})")
    out.append(_pow(names["small"], key[SMALL], latex))
    out.append(_pow(names["sigma"], key[SIG], latex))
    if latex:
        out.append(_latex_eps(e2))
    elif e2 < 0 and root:
        out.append(f"rooteps^{e2}")
    else:
        if root:
            out.append("rooteps")
        out.append(_pow(names["eps"], eps_p, latex))
    out.append(_pow(names["lam"], key[LAM], latex))
    out.append(_pow(names["a"], key[A], latex))
    t = key[TRIG]
    if t > 0:
        arg = "x" if t == 1 else f"{t}x"
        out.append(rf"\sin {arg}" if latex else f"sin({arg.replace('x', '*x') if t != 1 else 'x'})")
    elif t < 0:
        arg = "x" if t == -1 else f"{-t}x"
        out.append(rf"\cos {arg}" if latex else f"cos({arg.replace('x', '*x') if t != -1 else 'x'})")
    out.extend(format_factor(f, latex) for f in key[NOISE])
    return [s for s in out if s]


def _coeff_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def to_text(e: Expression) -> str:
    if e.is_zero():
        return "0"
    parts = []
    for key in sorted(e.keys(), key=_sort_key):
        c = e._t[key]
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        syms = _symbols(key, latex=False)
        if mag == 1 and syms:
            body = "*".join(syms)
        else:
            body = "*".join([_coeff_text(mag)] + syms)
        parts.append(f"{sign} {body}")
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else "-" + s[2:]


def to_latex(e: Expression) -> str:
    if e.is_zero():
        return "0"
    parts = []
    for key in sorted(e.keys(), key=_sort_key):
        c = e._t[key]
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        syms = " ".join(_symbols(key, latex=True))
        if mag == 1 and syms:
            coeff = ""
        elif mag.denominator == 1:
            coeff = str(mag.numerator)
        else:
            coeff = rf"\tfrac{{{mag.numerator}}}{{{mag.denominator}}}"
        parts.append(f"{sign} {coeff}{' ' if coeff and syms else ''}{syms}")
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else "-" + s[2:]


def fmt5(x: float, digits: int = 5) -> str:
    """Significant-digit rounding (half away from zero), positional, zeros trimmed."""
    d = Decimal(x)
    if d == 0:
        return "0"
    q = d.quantize(Decimal(1).scaleb(d.adjusted() - digits + 1), rounding=ROUND_HALF_UP)
    s = format(q, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


def to_numeric_text(e: Expression) -> str:
    """Rounded rendering, coefficients (including surds) to five significant digits."""
    if e.is_zero():
        return "0"
    parts = []
    for key in sorted(e.keys(), key=_sort_key):
        c = e._t[key]
        val = float(c) * math.sqrt(key[SURD])
        plain = key[:SURD] + (1,)
        syms = _symbols(plain, latex=False)
        sign = "-" if val < 0 else "+"
        mag = fmt5(abs(val))
        parts.append(f"{sign} {'*'.join(([] if mag == '1' and syms else [mag]) + syms)}")
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else "-" + s[2:]
