"""Superslow model of the coupled fast-slow system.

Three timescales: a fast field v, a slow field u and the superslow
amplitude a.  Linear noise is resolved first; quadratic noise is switched
on once both residuals vanish.
"""
# %%
from superslow.averaged import derive_averaged
from superslow.exprcore import coeffn, set_small_one
from superslow.fastslow import derive_fastslow, slow_limit
from superslow.render import to_text

fs = derive_fastslow()
print("sweeps (fast residual terms, slow residual terms):")
for i, (nv, nu) in enumerate(fs.history, 1):
    print(f"  {i}: {nv:4d} {nu:4d}")

# %% Amplitude equation.  Compare the deterministic part with the averaged one:
# the only differences are the eps corrections.
g = fs.gssm
print("deterministic:", to_text(coeffn(g, "sigma", 0)))
print("linear noise: ", to_text(coeffn(g, "sigma", 1)))
print(f"quadratic noise: {len(coeffn(g, 'sigma', 2))} terms")

# %% Fast field: order-one fluctuations scaled by sigma/sqrt(eps).
v = set_small_one(fs.v)
print("v, leading fluctuations:", to_text(v.filter(lambda k: k[1] == -1 and k[3] == 0 and k[4] == 0
                                                   and len(k[6]) == 1 and len(k[6][0][2]) == 1)))

# %% As eps -> 0 the fast-slow evolution collapses onto the averaged one.
avg = derive_averaged()
print("slow limit equals averaged model:", slow_limit(fs.g) == avg.g)
