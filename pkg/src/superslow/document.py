"""JSON model documents with exact rational coefficients.

Rationals are written as ``{"num": "...", "den": "..."}`` strings so nothing
is lost to floating point; ``parse(serialize(m))`` reproduces the model.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from . import __version__
from .convolution import PHI, PSI, ZZ, Rate
from .exprcore import A, E2, LAM, NOISE, SIG, SMALL, SURD, TRIG, Expression, _sort_key
from .model import ReducedModel

__all__ = ["DocumentError", "serialize", "parse", "dumps", "loads", "save", "load",
           "expression_to_terms", "terms_to_expression"]

_KIND = {PHI: "phi", ZZ: "zz", PSI: "psi"}
_KIND_BACK = {v: k for k, v in _KIND.items()}


class DocumentError(ValueError):
    """Malformed model document."""


def _rat(q: Fraction) -> dict:
    return {"num": str(q.numerator), "den": str(q.denominator)}


def _unrat(d) -> Fraction:
    try:
        q = Fraction(int(d["num"]), int(d["den"]))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise DocumentError(f"bad rational {d!r}") from exc
    return q


def _noise_to_dict(f: tuple) -> dict:
    kind, idx, convs = f
    out = {"kind": _KIND[kind]}
    if kind == ZZ:
        out["modes"] = [g[1][0] for g in idx]
        out["inner"] = [_noise_to_dict(g) for g in idx]
    else:
        out["modes"] = list(idx)
    out["convs"] = [{**_rat(r.value), "fast": r.fast} for r in convs]
    return out


def _noise_from_dict(d: dict) -> tuple:
    try:
        kind = _KIND_BACK[d["kind"]]
        convs = tuple(Rate(_unrat(c), bool(c["fast"])) for c in d["convs"])
        if kind == ZZ:
            idx = tuple(sorted(_noise_from_dict(g) for g in d["inner"]))
        else:
            idx = tuple(int(m) for m in d["modes"])
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"bad noise factor {d!r}") from exc
    return (kind, idx, convs)


def expression_to_terms(e: Expression) -> list[dict]:
    terms = []
    for k in sorted(e.keys(), key=_sort_key):
        c = e._t[k]
        t = {"coeff": _rat(c)}
        if k[SURD] != 1:
            t["surd"] = _rat(Fraction(k[SURD]))
        t.update(small_pow=k[SMALL], eps_pow=k[E2] // 2, rooteps_pow=k[E2] % 2,
                 sigma_pow=k[SIG], lam_pow=k[LAM], a_pow=k[A], mode=k[TRIG],
                 noise=[_noise_to_dict(f) for f in k[NOISE]])
        terms.append(t)
    return terms


def terms_to_expression(terms: list[dict]) -> Expression:
    out = Expression()
    for t in terms:
        try:
            c = _unrat(t["coeff"])
            surd = 1
            if "surd" in t:
                q = _unrat(t["surd"])
                # sqrt(n/d) = sqrt(n d) / d
                surd = q.numerator * q.denominator
                c /= q.denominator
            mono = Expression.monomial(
                c, small=int(t["small_pow"]), e2=2 * int(t["eps_pow"]) + int(t["rooteps_pow"]),
                sigma=int(t["sigma_pow"]), lam=int(t["lam_pow"]), a=int(t["a_pow"]),
                trig=int(t["mode"]), noise=tuple(_noise_from_dict(f) for f in t["noise"]),
                surd=surd)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DocumentError):
                raise
            raise DocumentError(f"bad term {t!r}") from exc
        out = out + mono
    return out


def serialize(m: ReducedModel) -> dict:
    doc = {
        "system": m.system,
        "terms": expression_to_terms(m.g),
        "fields": {"u": expression_to_terms(m.u)},
        "metadata": {
            "trunc_order": m.trunc_order,
            "iterations": m.iterations,
            "tool_version": __version__,
            "noise_modes": m.noise_modes,
            "history": [list(h) if isinstance(h, tuple) else h for h in m.history],
        },
    }
    if m.v is not None:
        doc["fields"]["v"] = expression_to_terms(m.v)
    return doc


def parse(doc: dict) -> ReducedModel:
    try:
        system = doc["system"]
        meta = doc["metadata"]
        g = terms_to_expression(doc["terms"])
        fields = doc.get("fields", {})
    except (KeyError, TypeError) as exc:
        raise DocumentError("document lacks system, terms or metadata") from exc
    if system not in ("averaged", "fastslow"):
        raise DocumentError(f"unknown system {system!r}")
    u = terms_to_expression(fields.get("u", []))
    v = terms_to_expression(fields["v"]) if "v" in fields else None
    history = [tuple(h) if isinstance(h, list) else h for h in meta.get("history", [])]
    return ReducedModel(system, g, u, v, int(meta.get("trunc_order", 0)),
                        int(meta.get("iterations", 0)), int(meta.get("noise_modes", 3)), history)


def dumps(m: ReducedModel) -> str:
    return json.dumps(serialize(m), indent=1, ensure_ascii=False)


def loads(text: str) -> ReducedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not JSON: {exc}") from exc
    return parse(doc)


def save(m: ReducedModel, path) -> None:
    Path(path).write_text(dumps(m) + "\n", encoding="utf-8")


def load(path) -> ReducedModel:
    return loads(Path(path).read_text(encoding="utf-8"))
