"""Command-line driver.

Subcommands::

    derive     run a derivation and write the model (json, text or latex)
    transform  weak-noise coefficients of a saved model
    validate   numerical oracles (long-rule, convolution, equilibrium)
    regress    compare fresh derivations against golden documents

Exit codes: 0 success, 1 usage, 2 non-convergence, 3 regression mismatch,
4 failed validation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, document
from .averaged import derive_averaged
from .exprcore import Expression
from .fastslow import derive_fastslow
from .model import ConvergenceError, DerivationConfig, ReducedModel, UnmatchedTermError
from .render import to_latex, to_text
from .weaknoise import NonCanonicalNoiseError, weak_model

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGENCE, EXIT_MISMATCH, EXIT_VALIDATION = range(5)

_DERIVE = {"averaged": derive_averaged, "fastslow": derive_fastslow}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def derive(system: str, noise_modes: int = 3, max_iter: int | None = None) -> ReducedModel:
    """Run the named derivation with default truncation."""
    return _DERIVE[system](DerivationConfig(system, noise_modes=noise_modes, max_iter=max_iter))


def _render(m: ReducedModel, fmt: str) -> str:
    if fmt == "json":
        return document.dumps(m)
    if fmt == "latex":
        return "\\dot a = " + to_latex(m.gssm)
    lines = [f"system: {m.system}  (truncation small^{m.trunc_order}, {m.iterations} iterations)",
             f"gssm = {to_text(m.gssm)}"]
    return "\n".join(lines)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def cmd_derive(args) -> int:
    try:
        m = derive(args.system, args.noise_modes, args.max_iter)
    except ConvergenceError as exc:
        print(f"derive: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    _emit(_render(m, args.format), args.out)
    return EXIT_OK


def cmd_transform(args) -> int:
    try:
        m = document.load(args.input)
    except (OSError, document.DocumentError) as exc:
        print(f"transform: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        w = weak_model(m.g)
    except NonCanonicalNoiseError as exc:
        print(f"transform: {exc}", file=sys.stderr)
        return EXIT_USAGE
    s = w.summary()
    if args.format == "json":
        _emit(json.dumps(s, indent=1, ensure_ascii=False), args.out)
        return EXIT_OK
    lines = []
    if args.show_gg:
        lines.append(f"gg = {s['gg']}")
    lines += [f"c20 = {s['c20']}", f"c21mean = {s['c21mean']}", f"c21 = {s['c21']}"]
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def _frac(text: str) -> float:
    return float(Fraction(text))


def cmd_validate(args) -> int:
    from . import numcheck as nc

    if args.check == "long-rule":
        cfg = nc.SimConfig(dt=args.dt, t_end=args.t_end, seed=args.seed,
                           n_realizations=args.realizations)
        rep = nc.check_long_rule(args.i, args.j, _frac(args.k), cfg)
    elif args.check == "convolution":
        cfg = nc.SimConfig(dt=args.dt, t_end=args.t_end, seed=args.seed)
        rep = nc.check_convolution_identity(_frac(args.alpha), _frac(args.beta_over_eps), cfg,
                                            tol=args.tol)
    else:
        model = document.load(args.model) if args.model else derive("fastslow")
        base = nc.SimConfig(eps=args.eps, lam_prime=args.lam_prime, sigma=0.0,
                            t_end=args.t_end, a0=args.a0)
        cfg = nc.SimConfig(**{**base.__dict__, "dt": base.max_fast_dt(), "record_every": 1000})
        rep = nc.check_equilibrium(model, cfg, tol=args.tol)
    _emit(rep.to_json(), args.out)
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def diff_expressions(want: Expression, got: Expression, label: str) -> list[str]:
    """Term-by-term differences, rendered for humans."""
    delta = got - want
    out = []
    for k, c in sorted(delta.items(), key=lambda kc: str(kc[0])):
        w = want._t.get(k, 0)
        g = got._t.get(k, 0)
        term = to_text(Expression({k: Fraction(1)}))
        out.append(f"{label}: {term}: golden {w}, derived {g}")
    return out


def cmd_regress(args) -> int:
    golden = Path(args.golden)
    files = sorted(golden.glob("*.json"))
    if not files:
        print(f"regress: no golden documents in {golden}", file=sys.stderr)
        return EXIT_USAGE
    problems = []
    for f in files:
        try:
            want = document.load(f)
        except document.DocumentError:
            continue
        try:
            got = derive(want.system, want.noise_modes)
        except ConvergenceError as exc:
            print(f"regress: {f.name}: {exc}", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        diffs = diff_expressions(want.g, got.g, f"{f.name} g")
        diffs += diff_expressions(want.u, got.u, f"{f.name} u")
        if want.v is not None:
            diffs += diff_expressions(want.v, got.v or Expression(), f"{f.name} v")
        status = "ok" if not diffs else f"{len(diffs)} mismatches"
        print(f"{f.name}: {status}")
        problems += diffs
    for p in problems[:50]:
        print(p)
    return EXIT_MISMATCH if problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="superslow", description="Stochastic slow-manifold models of a reaction-diffusion SPDE.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log iteration progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("derive", help="derive a reduced model")
    d.add_argument("--system", choices=sorted(_DERIVE), required=True)
    d.add_argument("--noise-modes", type=int, default=3)
    d.add_argument("--format", choices=("json", "text", "latex"), default="text")
    d.add_argument("--out")
    d.add_argument("--max-iter", type=int, help="iteration cap (default from SSM_MAX_ITER or built-in)")
    d.set_defaults(func=cmd_derive)

    t = sub.add_parser("transform", help="weak-noise coefficients of a saved model")
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--format", choices=("text", "json"), default="text")
    t.add_argument("--show-gg", action="store_true", help="also print the transformed evolution")
    t.add_argument("--out")
    t.set_defaults(func=cmd_transform)

    v = sub.add_parser("validate", help="numerical oracles")
    vs = v.add_subparsers(dest="check", required=True, parser_class=_Parser)
    lr = vs.add_parser("long-rule")
    lr.add_argument("--i", type=int, required=True)
    lr.add_argument("--j", type=int, required=True)
    lr.add_argument("--k", required=True, help="convolution rate, e.g. 7.6 or 38/5")
    lr.add_argument("--seed", type=int, default=1)
    lr.add_argument("--realizations", type=int, default=200)
    lr.add_argument("--dt", type=float, default=2e-3)
    lr.add_argument("--t-end", type=float, default=20.0)
    cv = vs.add_parser("convolution")
    cv.add_argument("--alpha", default="27/10")
    cv.add_argument("--beta-over-eps", default="50")
    cv.add_argument("--seed", type=int, default=1)
    cv.add_argument("--dt", type=float, default=1e-4)
    cv.add_argument("--t-end", type=float, default=20.0)
    cv.add_argument("--tol", type=float, default=0.03)
    eq = vs.add_parser("equilibrium")
    eq.add_argument("--model", help="saved fastslow document (default: derive afresh)")
    eq.add_argument("--eps", type=float, default=0.05)
    eq.add_argument("--lam-prime", type=float, default=0.1)
    eq.add_argument("--a0", type=float, default=0.5)
    eq.add_argument("--t-end", type=float, default=80.0)
    eq.add_argument("--tol", type=float, default=0.02)
    for sp in (lr, cv, eq):
        sp.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("regress", help="compare against golden documents")
    r.add_argument("--golden", default="tests/golden")
    r.set_defaults(func=cmd_regress)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if getattr(args, "noise_modes", 0) < 0:
        print("derive: --noise-modes must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UnmatchedTermError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
