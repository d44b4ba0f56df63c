"""Slow manifold and amplitude equation of the averaged stochastic PDE.

Run with ``python3 demos/01_averaged_model.py``.
"""
# %% Derive the model.  The iteration stops once the residual is exactly zero.
from superslow.averaged import derive_averaged, noise_forcing, residual_averaged
from superslow.exprcore import coeffn, set_small_one
from superslow.render import to_text

model = derive_averaged()
print(f"converged after {model.iterations} sweeps, residual sizes {model.history}")

# %% The amplitude equation, grouped by powers of the noise amplitude.
for p, label in [(0, "deterministic"), (1, "linear noise"), (2, "quadratic noise")]:
    part = coeffn(model.gssm, "sigma", p)
    print(f"{label:>16}: {to_text(part)}")

# %% A few terms of the slow manifold on which u lives.
u = set_small_one(model.u)
print("manifold, mode 3:", to_text(u.filter(lambda k: k[5] == 3 and k[2] <= 1 and k[4] <= 3)))

# %% The certificate: substitute back and nothing is left at this order.
res = residual_averaged(model.u, model.g, noise_forcing(3), model.trunc_order)
print("residual after substitution:", to_text(res))
