"""Numerical oracles: convolution identity, long-time rule, equilibrium, paired paths.

The last check integrates the full Galerkin system at a fast-resolving step
and takes about half a minute; pass ``--quick`` to skip it.
"""
# %%
import sys

import numpy as np

from superslow import numcheck as nc
from superslow.fastslow import derive_fastslow

model = derive_fastslow()

# %% Splitting a nested slow/fast convolution.  The error grows as alpha/B -> 1.
for alpha in (2.7, 10.0, 27.0):
    rep = nc.check_convolution_identity(alpha, 50.0)
    print(f"alpha={alpha:5.1f}: relative L2 error {rep.estimate:.2e}")

# %% phi_i * Z_k phi_j over long times: mean 1/2 if i == j, variance rate 1/(2k).
for i, j in ((1, 1), (1, 3)):
    rep = nc.check_long_rule(i, j, 7.6)
    print(f"({i},{j}) estimate {rep.estimate}, pass={rep.passed}")

# %% Deterministic steady state of the full system vs the model's root.
rep = nc.check_equilibrium(model)
print("equilibrium:", rep.estimate)

# %% Same noise, two models.
if "--quick" not in sys.argv:
    base = nc.SimConfig(eps=0.02, sigma=0.05, lam_prime=0.1, t_end=50.0, a0=0.5, record_every=1000)
    cfg = nc.SimConfig(**{**base.__dict__, "dt": base.max_fast_dt()})
    full = nc.simulate_full(cfg)
    red = nc.simulate_reduced(model, cfg)
    rel = np.linalg.norm(full.values[:, 0] - red.values[:, 0]) / np.linalg.norm(full.values[:, 0])
    print(f"paired paths over t in [0, 50]: relative L2 difference {rel:.2e}")
