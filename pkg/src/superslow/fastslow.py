"""Superslow model of the coupled fast-slow system

    u_t = u_xx + lambda sin u - v
    eps v_t = v_xx - v + u + sqrt(eps) sigma phi(x, t)

on ``0 < x < pi`` with Dirichlet conditions.  Three timescales coexist: the
fast field ``v`` (rates ``beta_m/eps``), the slow field ``u`` (rates
``alfa_m``) and the superslow amplitude ``a``.  Each sweep first corrects
both fields from the ``v`` residual, then from the ``u`` residual.  Terms
quadratic in the noise are suppressed until both residuals first vanish.

Unlike the averaged system, the noise amplitude ``sigma`` carries no
``small`` weight here; the forcing is graded only by ``small*rooteps``.
"""
from __future__ import annotations

import logging
from fractions import Fraction

from .averaged import alfa, dxx, lamb, noise_forcing, secular
from .convolution import (
    PHI,
    ZZ,
    d_dt,
    fast,
    format_factor,
    nonsecular_linear,
    nonsecular_quadratic,
    phi,
    slow,
    zz,
)
from .exprcore import (
    Expression,
    TrigError,
    amp,
    apply_linear,
    eps,
    rooteps,
    sin,
    sigma,
    sin_series,
    small,
    trig_combine,
    truncation,
)
from .model import DerivationConfig, ReducedModel, UnmatchedTermError, run_sweeps

log = logging.getLogger(__name__)

__all__ = [
    "beta",
    "residual_v",
    "residual_u",
    "uvinv",
    "vvinv",
    "uuinv",
    "vuinv",
    "apply_v_update",
    "apply_u_update",
    "derive_fastslow",
    "FastSlowState",
    "slow_limit",
]


def beta(m: int) -> Fraction:
    """Relative decay rate of mode ``m`` of the fast field (true rate ``beta/eps``)."""
    if m < 1:
        raise ValueError("mode must be positive")
    return Fraction(m * m + 1)


def _regrade(e: Expression) -> Expression:
    # multiply by small^2, truncate, divide back
    return (small(2) * e).shift(small=-2)


def residual_v(u: Expression, v: Expression, g: Expression, noise: Expression,
               order: int = 8, sigma_cap: int | None = None) -> Expression:
    with truncation(order, sigma_cap):
        res = (-small(2) * eps() * d_dt(v, g) + dxx(v) - v + u
               + small() * rooteps() * sigma() * noise)
        return trig_combine(_regrade(res))


def residual_u(u: Expression, v: Expression, g: Expression,
               order: int = 8, sigma_cap: int | None = None) -> Expression:
    with truncation(order, sigma_cap):
        res = -d_dt(u, g) + dxx(u) + lamb() * sin_series(u) - v
        return trig_combine(_regrade(res))


def _unmatched(what: str, t: int, noise: tuple) -> UnmatchedTermError:
    fs = "*".join(format_factor(f) for f in noise) or "1"
    return UnmatchedTermError(f"{what}: no rule for sin({t}*x)*{fs}")


def _smooth(p) -> bool:
    return bool(p) and not p[0].fast


def _is_phi_pair(noise: tuple) -> bool:
    return len(noise) == 2 and noise[0][0] == PHI and noise[1][0] == PHI


# -- updates driven by the v residual ---------------------------------------------

def _v_rule(t: int, noise: tuple, target: str) -> Expression:
    if t <= 0:
        raise TrigError(f"v-update: non-sine component (trig code {t})")
    m = t
    b = beta(m)
    if not noise:
        if m == 1:
            return sin(1) * (1 / b) if target == "v" else Expression()
        a_m = alfa(m)
        if target == "v":
            return sin(m) * ((a_m - 1 / b) / a_m / b)
        return sin(m) * (-1 / a_m / b)
    if len(noise) == 1:
        kind, idx, p = noise[0]
        if kind == PHI:
            if _smooth(p):
                return phi(idx[0], p) * sin(m) * (1 / b) if target == "v" else Expression()
            prepended = phi(idx[0], (fast(b),) + p) * sin(m)
            if target == "v":
                out = prepended * eps(-1)
                return out.shift(small=-1) if not p else out
            return prepended * small(1 if not p else 2) * (1 / b)
        if kind == ZZ and _smooth(p):
            return zz(idx, p) * sin(m) * (1 / b) if target == "v" else Expression()
    if _is_phi_pair(noise):
        p, q = noise[0][2], noise[1][2]
        if _smooth(p) and _smooth(q):
            return Expression.monomial(Fraction(1) / b, trig=m, noise=noise) if target == "v" else Expression()
    raise _unmatched(f"{target}vinv", t, noise)


def vvinv(e: Expression) -> Expression:
    """Fast-field correction driven by the fast residual."""
    return apply_linear(e, lambda t, n: _v_rule(t, n, "v"))


def uvinv(e: Expression) -> Expression:
    """Slow-field correction compensating a large fast-field update."""
    return apply_linear(e, lambda t, n: _v_rule(t, n, "u"))


# -- updates driven by the u residual -------------------------------------------------

def _u_rule(t: int, noise: tuple, target: str) -> Expression:
    if t <= 0:
        raise TrigError(f"u-update: non-sine component (trig code {t})")
    m = t
    scale = Fraction(1) if target == "u" else 1 / beta(m)
    if not noise:
        if m == 1:
            raise UnmatchedTermError("u-update: secular sin(x) content left in residual")
        return sin(m) * (scale / alfa(m))
    if len(noise) == 1:
        kind, idx, p = noise[0]
        if kind == PHI:
            if m == 1:
                return nonsecular_linear(idx[0], p) * sin(1) * scale
            out = phi(idx[0], (slow(alfa(m)),) + p) * sin(m) * scale
            return out * small() if p and p[0].fast else out
        if kind == ZZ:
            if m == 1:
                return _critical_zz(idx, p, scale)
            return zz(idx, (slow(alfa(m)),) + p) * sin(m) * scale
    if _is_phi_pair(noise):
        if m == 1:
            (_, (n,), p), (_, (l,), q) = noise
            return nonsecular_quadratic(n, p, l, q) * sin(1) * scale
        return zz(noise, (slow(alfa(m)),)) * sin(m) * scale
    raise _unmatched(f"{target}uinv", t, noise)


def _critical_zz(inner: tuple, p: tuple, scale: Fraction) -> Expression:
    # recursion peels one convolution per level; the fast-field variant
    # divides by beta(1) at every level
    if not p:
        (_, (n,), pp), (_, (l,), qq) = inner
        return nonsecular_quadratic(n, pp, l, qq) * sin(1) * scale
    head = p[0].value
    return (_critical_zz(inner, p[1:], scale) - zz(inner, p) * sin(1)) * (scale / head)


def uuinv(e: Expression) -> Expression:
    return apply_linear(e, lambda t, n: _u_rule(t, n, "u"))


def vuinv(e: Expression) -> Expression:
    return apply_linear(e, lambda t, n: _u_rule(t, n, "v"))


class FastSlowState:
    """Mutable iteration state: fields, evolution and the noise-order phase."""

    def __init__(self, order: int = 8):
        with truncation(order):
            self.u = small() * amp() * sin(1)
            self.v = self.u * Fraction(1, 2)
        self.g = Expression()
        self.order = order
        self.quad_phase = False
        self.iteration = 0

    @property
    def sigma_cap(self) -> int:
        return 3 if self.quad_phase else 2


def apply_v_update(s: FastSlowState, resv: Expression) -> FastSlowState:
    with truncation(s.order, s.sigma_cap):
        du = uvinv(resv)
        dv = vvinv(resv)
        s.u = s.u + du
        s.v = s.v + dv
    return s


def apply_u_update(s: FastSlowState, resu: Expression) -> FastSlowState:
    with truncation(s.order, s.sigma_cap):
        gd = secular(small(2) * resu).shift(small=-2)
        s.g = s.g + gd.shift(small=-1)
        rest = resu - gd * sin(1)
        s.u = s.u + uuinv(rest)
        s.v = s.v + vuinv(rest)
    return s


def derive_fastslow(cfg: DerivationConfig | None = None) -> ReducedModel:
    """Iterate to the stochastic superslow manifold of the fast-slow system.

    Linear noise effects are resolved first with ``sigma**2`` suppressed;
    once both residuals vanish the quadratic noise terms are switched on and
    the iteration continues until the residuals vanish again.
    """
    cfg = cfg or DerivationConfig("fastslow")
    s = FastSlowState(cfg.order)
    noise = noise_forcing(cfg.noise_modes)
    last = {"resu": None}
    history = []

    def sweep(it: int) -> bool:
        s.iteration = it
        resv = residual_v(s.u, s.v, s.g, noise, s.order, s.sigma_cap)
        apply_v_update(s, resv)
        resu_prev = last["resu"]
        if not s.quad_phase and resu_prev is not None and resu_prev.is_zero() and resv.is_zero():
            s.quad_phase = True
            log.info("fastslow sweep %d: enabling quadratic noise", it)
        resu = residual_u(s.u, s.v, s.g, s.order, s.sigma_cap)
        apply_u_update(s, resu)
        last["resu"] = resu
        history.append((len(resv), len(resu)))
        log.info("fastslow sweep %d: |resv|=%d |resu|=%d", it, len(resv), len(resu))
        return resv.is_zero() and resu.is_zero() and s.quad_phase

    its = run_sweeps(sweep, cfg.iterations_cap, "fast-slow derivation")
    return ReducedModel("fastslow", s.g, s.u, s.v, s.order, its, cfg.noise_modes, history)


def slow_limit(g: Expression, max_order: int = 4) -> Expression:
    """Terms of a fast-slow evolution that survive the slow limit.

    Keeps terms whose only ``eps`` dependence is the ``sqrt(eps)`` attached to
    each noise factor, regraded with ``sigma`` weighted like ``small`` as in
    the averaged system, up to ``small**max_order``.  The result is directly
    comparable with the averaged evolution.
    """
    out = {}
    for k, c in g.items():
        s, e2, sg = k[0], k[1], k[2]
        if e2 == sg and s + sg <= max_order:
            out[(s + sg,) + k[1:]] = c
    return Expression(out)
