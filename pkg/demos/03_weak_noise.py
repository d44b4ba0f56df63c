"""Quadratic noise, replaced by its long-time equivalent.

A product of white noise with a convolved white noise acts, over long
times, like a mean drift plus a fresh white noise.  The drift shifts the
bifurcation; the new noises combine into one effective volatility.
"""
# %%
from superslow.exprcore import coeffn
from superslow.fastslow import derive_fastslow
from superslow.render import to_numeric_text
from superslow.weaknoise import long_transform, weak_model
from superslow.convolution import phi, slow
from fractions import Fraction

# %% The rule on a single product: drift 1/2 and a psi noise of size 1/sqrt(2k).
print(to_numeric_text(long_transform(phi(1) * phi(1, [slow(Fraction(38, 5))]))))

# %% The whole amplitude equation.
w = weak_model(derive_fastslow().g)
print("sigma^2 part of the weak model:")
print(" ", to_numeric_text(coeffn(w.gg, "sigma", 2)))
for name, text in w.summary().items():
    if name != "gg":
        print(f"{name} = {text}")
