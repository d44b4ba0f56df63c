"""Stochastic slow manifold of the averaged slow reaction-diffusion equation.

The field ``u(x, t)`` on ``0 < x < pi`` obeys

    u_t = u_xx + lambda sin u - (1 - d_xx)^{-1} u
          - sqrt(eps) sigma (1 - d_xx)^{-1} phi(x, t)

with ``lambda = 3/2 + lam``.  The amplitude ``a`` of the critical mode
``sin x`` is evolved by ``da/dt = g``; both ``u`` and ``g`` are refined by
residual-driven iteration until the residual vanishes to the truncation
order.
"""
from __future__ import annotations

import logging
from fractions import Fraction

from .convolution import (
    PHI,
    ZZ,
    d_dt,
    format_factor,
    inv_rate_expr,
    nonsecular_linear,
    nonsecular_product,
    nonsecular_quadratic,
    phi,
    secular_quadratic,
    slow,
    zz,
)
from .exprcore import (
    TRIG,
    Expression,
    TrigError,
    amp,
    apply_linear,
    const,
    lam,
    rooteps,
    sigma,
    sin,
    sin_series,
    small,
    trig_combine,
    truncation,
)
from .model import DerivationConfig, ReducedModel, UnmatchedTermError, run_sweeps

log = logging.getLogger(__name__)

__all__ = [
    "alfa",
    "iddi",
    "dxx",
    "noise_forcing",
    "lamb",
    "residual_averaged",
    "secular",
    "uinv",
    "derive_averaged",
]


def alfa(m: int) -> Fraction:
    """Linear decay rate of mode ``sin(m x)`` at the bifurcation."""
    if m < 1:
        raise ValueError("mode must be positive")
    return Fraction(m * m) - Fraction(3, 2) + Fraction(1, m * m + 1)


def _modewise(e: Expression, factor) -> Expression:
    out = {}
    for k, c in e.items():
        m = k[TRIG]
        if m <= 0:
            raise TrigError(f"expected a sine mode, got trig code {m}")
        out[k] = c * factor(m)
    return Expression(out)


def iddi(e: Expression) -> Expression:
    """Apply ``(1 - d_xx)^{-1}`` to a sine series."""
    return _modewise(e, lambda m: Fraction(1, 1 + m * m))


def dxx(e: Expression) -> Expression:
    return _modewise(e, lambda m: -m * m)


def noise_forcing(n_modes: int = 3) -> Expression:
    """``sum_{n=1}^{n_modes} phi(n, ()) sin(n x)``."""
    total = Expression()
    for n in range(1, n_modes + 1):
        total = total + phi(n) * sin(n)
    return total


def lamb() -> Expression:
    return const(Fraction(3, 2)) + small(2) * lam()


def sig() -> Expression:
    return small() * sigma()


def residual_averaged(u: Expression, g: Expression, noise: Expression,
                      order: int = 6) -> Expression:
    with truncation(order):
        res = (-d_dt(u, g) + dxx(u) + lamb() * sin_series(u) - iddi(u)
               - small() * rooteps() * sig() * iddi(noise))
        return trig_combine(res)


def _unmatched(what: str, t: int, noise: tuple) -> UnmatchedTermError:
    fs = "*".join(format_factor(f) for f in noise) or "1"
    return UnmatchedTermError(f"{what}: no rule for sin({t}*x)*{fs}")


def _inv_rates(p) -> Expression:
    out = const(1)
    for r in p:
        out = out * inv_rate_expr(r)
    return out


def _secular_rule(t: int, noise: tuple) -> Expression:
    if t <= 0:
        raise TrigError(f"secular: non-sine component (trig code {t})")
    if t != 1:
        return Expression()
    if not noise:
        return const(1)
    if len(noise) == 1:
        kind, idx, p = noise[0]
        if kind == PHI:
            out = phi(idx[0]) * _inv_rates(p)
            if p and p[0].fast:
                out = out * small()
            return out
        if kind == ZZ:
            return _secular_rule(1, idx) * _inv_rates(p)
    if len(noise) == 2 and noise[0][0] == PHI and noise[1][0] == PHI:
        (_, (n,), p), (_, (m,), q) = noise
        return secular_quadratic(n, p, m, q)
    raise _unmatched("secular", t, noise)


def secular(e: Expression) -> Expression:
    """Resonant forcing of the critical mode, stripped of memory integrals.

    The result carries no ``sin x`` factor; it is the increment to the
    evolution before the ``small`` regrading.
    """
    return apply_linear(e, _secular_rule)


def _uinv_rule(t: int, noise: tuple) -> Expression:
    if t <= 0:
        raise TrigError(f"uinv: non-sine component (trig code {t})")
    m = t
    if not noise:
        if m == 1:
            raise UnmatchedTermError("uinv: secular sin(x) content left in residual")
        return sin(m) * (1 / alfa(m))
    if len(noise) == 1:
        kind, idx, p = noise[0]
        if kind == PHI:
            if m == 1:
                return nonsecular_linear(idx[0], p) * sin(1)
            return phi(idx[0], (slow(alfa(m)),) + p) * sin(m)
        if kind == ZZ:
            if m == 1:
                return sin(1) * nonsecular_product(idx, p)
            return sin(m) * zz(idx, (slow(alfa(m)),) + p)
    if len(noise) == 2 and noise[0][0] == PHI and noise[1][0] == PHI:
        if m == 1:
            (_, (n,), p), (_, (l,), q) = noise
            return nonsecular_quadratic(n, p, l, q) * sin(1)
        return sin(m) * zz(noise, (slow(alfa(m)),))
    raise _unmatched("uinv", t, noise)


def uinv(e: Expression) -> Expression:
    """Solve ``(d_t + L) u' = e`` mode by mode, ``L sin(mx) = alfa(m) sin(mx)``.

    Non-critical modes gain a convolution at their decay rate; the critical
    mode (whose secular part must already be removed) is handled by
    integration by parts.
    """
    return apply_linear(e, _uinv_rule)


def derive_averaged(cfg: DerivationConfig | None = None) -> ReducedModel:
    """Iterate to the stochastic slow manifold of the averaged equation."""
    cfg = cfg or DerivationConfig("averaged")
    order = cfg.order
    noise = noise_forcing(cfg.noise_modes)
    state = {"u": small() * amp() * sin(1), "g": Expression()}
    history = []

    def sweep(it: int) -> bool:
        res = residual_averaged(state["u"], state["g"], noise, order)
        history.append(len(res))
        log.info("averaged sweep %d: residual has %d terms", it, len(res))
        if res.is_zero():
            return True
        with truncation(order):
            gd = secular(res)
            state["g"] = state["g"] + gd.shift(small=-1)
            state["u"] = state["u"] + uinv(res - gd * sin(1))
        return False

    its = run_sweeps(sweep, cfg.iterations_cap, "averaged derivation")
    return ReducedModel("averaged", state["g"], state["u"], None, order, its,
                        cfg.noise_modes, history)
