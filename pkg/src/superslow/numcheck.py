"""Numerical oracles for the derived models.

Everything here is independent of the symbolic machinery: Galerkin
simulation of the fast-slow SPDE, simulation of a reduced amplitude SDE read
off a :class:`~superslow.model.ReducedModel`, and Monte Carlo checks of the
convolution identity and of the long-time noise rule.

All stochastic integration is Stratonovich (Heun predictor-corrector).
Noise streams are counter-based (Philox) and keyed by ``(seed, mode)`` so a
full and a reduced run with the same seed and step see the same Wiener
increments.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import brentq
from scipy.signal import lfilter

from .convolution import PHI
from .exprcore import A, E2, LAM, NOISE, SIG, SMALL, SURD, TRIG, Expression, set_small_one

__all__ = [
    "SimConfig",
    "Trajectory",
    "Report",
    "DivergenceError",
    "wiener_increments",
    "simulate_full",
    "simulate_reduced",
    "drift_polynomial",
    "equilibrium_root",
    "check_equilibrium",
    "check_convolution_identity",
    "check_long_rule",
]


class DivergenceError(FloatingPointError):
    """The integrated state became non-finite."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    t_end: float = 20.0
    seed: int = 1
    n_modes: int = 8
    eps: float = 0.05
    sigma: float = 0.0
    lam_prime: float = 0.1
    n_realizations: int = 200
    noise_modes: int = 3
    a0: float = 0.5
    record_every: int = 100

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.n_modes < 1:
            raise ValueError("need at least one mode")
        if self.noise_modes > self.n_modes:
            raise ValueError("noise_modes exceeds n_modes")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def max_fast_dt(self) -> float:
        return self.eps / (10 * (self.n_modes ** 2 + 1))


@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray  # shape (len(times), n_components)

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")


@dataclass
class Report:
    test: str
    params: dict
    estimate: object
    stderr: object
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=float)


def wiener_increments(seed: int, mode: int, n_steps: int, dt: float) -> np.ndarray:
    """Wiener increments over ``n_steps`` steps of size ``dt`` for one noise mode."""
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, mode], dtype=np.uint64)))
    return gen.standard_normal(n_steps) * math.sqrt(dt)


def _increments(cfg: SimConfig, modes) -> np.ndarray:
    n = cfg.n_steps
    out = np.zeros((max(modes, default=0) + 1, n))
    for m in modes:
        out[m] = wiener_increments(cfg.seed, m, n, cfg.dt)
    return out


# -- full Galerkin model ------------------------------------------------------------

@njit(cache=True)
def _full_drift(x, n, lam, eps, basis, weights):
    u = x[:n]
    v = x[n:]
    ux = basis @ u
    proj = basis.T @ (np.sin(ux) * weights)
    out = np.empty(2 * n)
    for i in range(n):
        m = i + 1
        out[i] = -m * m * u[i] + lam * proj[i] - v[i]
        out[n + i] = (-(m * m + 1) * v[i] + u[i]) / eps
    return out


@njit(cache=True)
def _full_heun(x0, n, lam, eps, dt, basis, weights, dw, scale, record_every):
    n_steps = dw.shape[1]
    n_noise = dw.shape[0]
    n_rec = n_steps // record_every + 1
    rec = np.empty((n_rec, 2 * n))
    x = x0.copy()
    rec[0] = x
    r = 1
    for s in range(n_steps):
        f0 = _full_drift(x, n, lam, eps, basis, weights)
        kick = np.zeros(2 * n)
        for m in range(n_noise):
            kick[n + m] = scale * dw[m, s]
        xp = x + f0 * dt + kick
        f1 = _full_drift(xp, n, lam, eps, basis, weights)
        x = x + 0.5 * (f0 + f1) * dt + kick
        if not np.all(np.isfinite(x)):
            return rec[:r], s + 1
        if (s + 1) % record_every == 0:
            rec[r] = x
            r += 1
    return rec[:r], -1


def _quadrature(n_modes: int, n_points: int | None = None):
    q = n_points or 8 * n_modes
    xq = (np.arange(q) + 0.5) * np.pi / q
    basis = np.sin(np.outer(xq, np.arange(1, n_modes + 1)))
    weights = np.full(q, 2.0 / q)
    return basis, weights


def simulate_full(cfg: SimConfig, u0: np.ndarray | None = None,
                  v0: np.ndarray | None = None) -> Trajectory:
    """Integrate the Galerkin projection of the fast-slow SPDE.

    Components are ``u_1..u_N`` followed by ``v_1..v_N``.  By default the
    state starts on the linear slow subspace ``u = a0 sin x``, ``v = u/2``.
    """
    n = cfg.n_modes
    if cfg.dt > cfg.max_fast_dt() * (1 + 1e-9):
        raise ValueError(f"dt={cfg.dt} does not resolve the fast field (need <= {cfg.max_fast_dt():.3g})")
    x0 = np.zeros(2 * n)
    if u0 is None:
        x0[0] = cfg.a0
    else:
        x0[:n] = u0
    x0[n:] = x0[:n] / 2 if v0 is None else v0
    if cfg.sigma and cfg.noise_modes:
        dw = _increments(cfg, range(1, cfg.noise_modes + 1))[1:]
    else:
        dw = np.zeros((0, cfg.n_steps))
    basis, weights = _quadrature(n)
    rec, bad = _full_heun(x0, n, 1.5 + cfg.lam_prime, cfg.eps, cfg.dt, basis, weights,
                          dw, cfg.sigma / math.sqrt(cfg.eps), cfg.record_every)
    if bad >= 0:
        raise DivergenceError(f"full simulation non-finite at step {bad}")
    times = np.arange(len(rec)) * cfg.dt * cfg.record_every
    return Trajectory(times, rec)


# -- reduced amplitude SDE ------------------------------------------------------------

def _numeric_scalar(key: tuple, c, cfg: SimConfig) -> float:
    val = float(c) * math.sqrt(key[SURD])
    if key[E2]:
        val *= cfg.eps ** (key[E2] / 2)
    if key[SIG]:
        val *= cfg.sigma ** key[SIG]
    if key[LAM]:
        val *= cfg.lam_prime ** key[LAM]
    return val


class _Compiled:
    """Flat arrays describing ``da = drift dt + sum_i diff_i dW_i`` with memory states."""

    def __init__(self, g: Expression, cfg: SimConfig):
        chains: dict[tuple, int] = {}
        rates: list[float] = []
        source: list[int] = []   # >0: driven by dW_mode; <0: driven by state (-idx-1)

        def state_for(mode: int, p: tuple) -> int:
            key = (mode, p)
            if key in chains:
                return chains[key]
            if p[0].fast:
                raise ValueError("reduced model still contains fast convolutions")
            if len(p) == 1:
                src = mode
            else:
                src = -state_for(mode, p[1:]) - 1
            rates.append(float(p[0].value))
            source.append(src)
            chains[key] = len(rates) - 1
            return chains[key]

        coef, apow, bare, conv1, conv2 = [], [], [], [], []
        for key, c in set_small_one(g).items():
            if key[TRIG]:
                raise ValueError("amplitude equation must not contain spatial factors")
            val = _numeric_scalar(key, c, cfg)
            if val == 0:
                continue
            b, cs = 0, []
            for f in key[NOISE]:
                if f[0] != PHI:
                    raise ValueError("only phi noises can be simulated")
                if f[2]:
                    cs.append(state_for(f[1][0], f[2]))
                elif b:
                    raise ValueError("product of two white noises is not defined")
                else:
                    b = f[1][0]
            if len(cs) > 2:
                raise ValueError("at most two convolved factors per term")
            cs += [-1] * (2 - len(cs))
            coef.append(val)
            apow.append(key[A])
            bare.append(b)
            conv1.append(cs[0])
            conv2.append(cs[1])
        self.coef = np.array(coef, dtype=np.float64)
        self.apow = np.array(apow, dtype=np.int64)
        self.bare = np.array(bare, dtype=np.int64)
        self.conv1 = np.array(conv1, dtype=np.int64)
        self.conv2 = np.array(conv2, dtype=np.int64)
        self.rates = np.array(rates, dtype=np.float64)
        self.source = np.array(source, dtype=np.int64)
        self.modes = sorted({m for m in bare if m} | {s for s in source if s > 0})


@njit(cache=True)
def _reduced_field(a, y, coef, apow, bare, conv1, conv2, rates, source, n_noise):
    drift = 0.0
    diff = np.zeros(n_noise)
    for t in range(coef.shape[0]):
        val = coef[t] * a ** apow[t]
        if conv1[t] >= 0:
            val *= y[conv1[t]]
        if conv2[t] >= 0:
            val *= y[conv2[t]]
        if bare[t] > 0:
            diff[bare[t]] += val
        else:
            drift += val
    ydrift = np.empty(y.shape[0])
    for s in range(y.shape[0]):
        ydrift[s] = -rates[s] * y[s]
        if source[s] < 0:
            ydrift[s] += y[-source[s] - 1]
    return drift, diff, ydrift


@njit(cache=True)
def _reduced_heun(a0, coef, apow, bare, conv1, conv2, rates, source, dw, dt, record_every):
    n_noise, n_steps = dw.shape
    ns = rates.shape[0]
    y = np.zeros(ns)
    a = a0
    n_rec = n_steps // record_every + 1
    rec = np.empty(n_rec)
    rec[0] = a
    r = 1
    for s in range(n_steps):
        inc = np.ascontiguousarray(dw[:, s])
        d0, g0, yd0 = _reduced_field(a, y, coef, apow, bare, conv1, conv2, rates, source, n_noise)
        ykick = np.zeros(ns)
        for k in range(ns):
            if source[k] > 0:
                ykick[k] = inc[source[k]]
        ap = a + d0 * dt + np.dot(g0, inc)
        yp = y + yd0 * dt + ykick
        d1, g1, yd1 = _reduced_field(ap, yp, coef, apow, bare, conv1, conv2, rates, source, n_noise)
        a = a + 0.5 * (d0 + d1) * dt + 0.5 * np.dot(g0 + g1, inc)
        y = y + 0.5 * (yd0 + yd1) * dt + ykick
        if not np.isfinite(a):
            return rec[:r], s + 1
        if (s + 1) % record_every == 0:
            rec[r] = a
            r += 1
    return rec[:r], -1


def simulate_reduced(model, cfg: SimConfig) -> Trajectory:
    """Integrate the amplitude SDE ``da = g dt`` of a reduced model.

    Bare noises ``phi(n,{})`` become Stratonovich increments ``dW_n`` taken
    from the same streams as :func:`simulate_full`; convolved noises become
    auxiliary Ornstein-Uhlenbeck states started at zero.
    """
    g = model.g if hasattr(model, "g") else model
    comp = _Compiled(g, cfg)
    top = max(comp.modes, default=0)
    dw = _increments(cfg, comp.modes) if cfg.sigma else np.zeros((top + 1, cfg.n_steps))
    if dw.shape[0] < top + 1:
        dw = np.zeros((top + 1, cfg.n_steps))
    rec, bad = _reduced_heun(float(cfg.a0), comp.coef, comp.apow, comp.bare, comp.conv1,
                             comp.conv2, comp.rates, comp.source, dw, cfg.dt, cfg.record_every)
    if bad >= 0:
        raise DivergenceError(f"reduced simulation non-finite at step {bad}")
    times = np.arange(len(rec)) * cfg.dt * cfg.record_every
    return Trajectory(times, rec[:, None])


# -- deterministic equilibrium ---------------------------------------------------------

def drift_polynomial(g: Expression, eps: float, lam_prime: float) -> np.ndarray:
    """Noise-free part of ``g`` as polynomial coefficients in ``a`` (lowest first)."""
    g1 = set_small_one(g)
    top = max((k[A] for k in g1.keys()), default=0)
    coeffs = np.zeros(top + 1)
    cfg = SimConfig(eps=eps, lam_prime=lam_prime, sigma=0.0)
    for k, c in g1.items():
        if k[NOISE] or k[SIG]:
            continue
        coeffs[k[A]] += _numeric_scalar(k, c, cfg)
    return coeffs


def equilibrium_root(g: Expression, eps: float, lam_prime: float) -> float:
    """Smallest positive equilibrium amplitude of the noise-free reduced model."""
    c = drift_polynomial(g, eps, lam_prime)
    if len(c) < 2 or c[1] == 0:
        raise ValueError("drift has no linear growth term")
    # g(a) = a * h(a); bracket the first sign change of h
    h = np.polynomial.Polynomial(c[1:])
    grid = np.linspace(1e-6, 10.0, 20001)
    vals = h(grid)
    change = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if not len(change):
        raise ValueError("no positive equilibrium below a = 10")
    i = change[0]
    return float(brentq(h, grid[i], grid[i + 1], xtol=1e-14))


def check_equilibrium(model, cfg: SimConfig | None = None, tol: float = 0.02,
                      settle: float = 0.25) -> Report:
    """Compare the full model's steady mode-1 amplitude with the reduced equilibrium.

    The steady amplitude is the mean of ``u_1`` over the last ``settle``
    fraction of the run (with ``sigma = 0`` this is simply its final value).
    """
    if cfg is None:
        base = SimConfig(eps=0.05, lam_prime=0.1, sigma=0.0, t_end=80.0, a0=0.5)
        cfg = SimConfig(**{**asdict(base), "dt": base.max_fast_dt(), "record_every": 1000})
    root = equilibrium_root(model.g, cfg.eps, cfg.lam_prime)
    traj = simulate_full(cfg)
    tail = traj.values[int(len(traj.values) * (1 - settle)):, 0]
    steady = float(np.mean(tail))
    rel = abs(steady - root) / root
    return Report("equilibrium",
                  {"eps": cfg.eps, "lam_prime": cfg.lam_prime, "sigma": cfg.sigma,
                   "dt": cfg.dt, "t_end": cfg.t_end, "n_modes": cfg.n_modes, "tol": tol},
                  {"steady_amplitude": steady, "model_root": root, "relative_error": rel},
                  float(np.std(tail)), rel <= tol)


# -- convolution identity ----------------------------------------------------------------

def _ou_exponential(rate: float, dw: np.ndarray, dt: float) -> np.ndarray:
    # exponential integrator, increment spread uniformly over the step
    c = math.exp(-rate * dt)
    w = (1 - c) / (rate * dt) if rate else 1.0
    y = lfilter([0.0, w], [1.0, -c], np.append(dw, 0.0))
    return y


@njit(cache=True)
def _nested_heun(outer, inner, dw, dt):
    # w' = -outer w + y,  y' = -inner y + phi
    y = 0.0
    w = np.zeros(dw.shape[0] + 1)
    for s in range(dw.shape[0]):
        fy0 = -inner * y
        fw0 = -outer * w[s] + y
        yp = y + fy0 * dt + dw[s]
        wp = w[s] + fw0 * dt
        y = y + 0.5 * (fy0 - inner * yp) * dt + dw[s]
        w[s + 1] = w[s] + 0.5 * (fw0 - outer * wp + yp) * dt
    return w


def check_convolution_identity(alpha: float, beta_over_eps: float, cfg: SimConfig | None = None,
                               tol: float = 0.03, n_terms: int = 9) -> Report:
    """Nested versus linearised convolution on one white-noise path.

    The left side integrates ``Z_alpha Z_B phi`` as a coupled pair by Heun
    steps.  The right side combines ``Z_alpha phi`` and ``Z_B phi`` computed
    by exponential filters with the truncated series ``(1/B) sum_n (alpha/B)^n``
    used in the derivation.  The two discretisations are independent, so
    agreement is not automatic.
    """
    cfg = cfg or SimConfig(dt=1e-4, t_end=20.0, seed=1)
    big = float(beta_over_eps)
    dw = wiener_increments(cfg.seed, 0, cfg.n_steps, cfg.dt)
    lhs = _nested_heun(float(alpha), big, dw, cfg.dt)
    series = sum((alpha / big) ** k for k in range(n_terms + 1)) / big
    rhs = series * (_ou_exponential(float(alpha), dw, cfg.dt) - _ou_exponential(big, dw, cfg.dt))
    err = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    return Report("convolution-identity",
                  {"alpha": float(alpha), "beta_over_eps": big, "dt": cfg.dt,
                   "t_end": cfg.t_end, "seed": cfg.seed, "tol": tol},
                  err, None, err <= tol,
                  {"series_ratio": alpha / big})


# -- long-time rule ---------------------------------------------------------------------

def check_long_rule(i: int, j: int, k: float, cfg: SimConfig | None = None,
                    n_se: float = 3.0) -> Report:
    """Monte Carlo check of ``phi_i * Z_k phi_j ~ delta_ij/2 + psi/sqrt(2k)``.

    For each realisation ``S = int_0^T Y o dW_i`` with ``dY = -k Y dt + dW_j``
    started from its stationary law.  ``S/T`` estimates the drift and
    ``Var(S)/T`` the squared volatility.  Both must lie within ``n_se``
    standard errors of the rule.
    """
    cfg = cfg or SimConfig(dt=2e-3, t_end=20.0, seed=1, n_realizations=200)
    R, n, dt = cfg.n_realizations, cfg.n_steps, cfg.dt
    T = n * dt
    k = float(k)
    gen = np.random.Generator(np.random.Philox(key=np.array([cfg.seed, 1000 * i + j], dtype=np.uint64)))
    dwi = gen.standard_normal((R, n)) * math.sqrt(dt)
    dwj = dwi if i == j else gen.standard_normal((R, n)) * math.sqrt(dt)
    c = math.exp(-k * dt)
    # exact-mean recursion Y[n+1] = c Y[n] + dW_j[n]; stationary variance dt/(1-c^2)
    y0 = gen.standard_normal(R) * math.sqrt(dt / (1 - c * c))
    y_next, _ = lfilter([1.0], [1.0, -c], dwj, axis=1, zi=(c * y0)[:, None])
    y_prev = np.concatenate([y0[:, None], y_next[:, :-1]], axis=1)
    s = np.sum(0.5 * (y_prev + y_next) * dwi, axis=1)
    mean_rate = s.mean() / T
    mean_se = s.std(ddof=1) / math.sqrt(R) / T
    centred = s - s.mean()
    var_rate = centred.var(ddof=1) / T
    m4 = np.mean(centred ** 4)
    var_se = math.sqrt(max(m4 - centred.var() ** 2, 0.0) / R) / T
    want_mean = 0.5 if i == j else 0.0
    want_var = 1 / (2 * k)
    ok_mean = abs(mean_rate - want_mean) <= n_se * mean_se
    ok_var = abs(var_rate - want_var) <= n_se * var_se
    return Report("long-rule",
                  {"i": i, "j": j, "k": k, "dt": dt, "t_end": T, "seed": cfg.seed,
                   "n_realizations": R},
                  {"mean_rate": float(mean_rate), "variance_rate": float(var_rate)},
                  {"mean_rate": float(mean_se), "variance_rate": float(var_se)},
                  bool(ok_mean and ok_var),
                  {"expected_mean_rate": want_mean, "expected_variance_rate": want_var})
