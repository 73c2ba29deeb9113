"""
Evaluating A_n and B_n
======================

``B_n(phi)`` is the log-determinant of the Gram matrix of the degree-n
sections under the weight ``e^phi``; ``A_n`` subtracts half the Dirichlet
energy and ``(n+1)`` times the mean.  This script evaluates both on a few
simple conformal factors and checks the n = 0 case against the classical
closed form.
"""

import math

from mtlab.funcspace import make_family
from mtlab.gram import functional_A, log_det_B

# %%
# For n = 0 the Gram matrix is 1 x 1 and ``B_0(a u3) = log(sinh a / a)``.
for a in (0.5, 1.0, 2.0):
    phi = make_family({"type": "dipole", "a": a})
    print(f"a = {a:3.1f}   B_0 = {log_det_B(0, phi):.15f}   closed form = {math.log(math.sinh(a) / a):.15f}")

# %%
# ``A_n`` is invariant under adding constants, vanishes at constants and
# stays negative on the dipole family for every n we try.
phi = make_family("dipole:1")
print("\n n      B_n(u3)        A_n(u3)     A_n(u3 + 5)")
for n in (0, 1, 2, 4, 8, 16, 32):
    rep = functional_A(n, phi)
    shifted = functional_A(n, phi + 5.0)
    print(f"{n:2d}  {rep.B:12.8f}  {rep.A:12.8f}  {shifted.A:12.8f}")

# %%
# Random band-limited factors with growing energy.
print("\nenergy   A_4(phi)")
for E in (0.1, 1.0, 4.0, 16.0):
    phi = make_family({"type": "random", "L_max": 4, "energy": E, "seed": 1})
    print(f"{E:6.1f}  {functional_A(4, phi).A:10.5f}")
