"""
The circle baseline and the large-n limit
=========================================

On the circle the analogous Gram determinants are Toeplitz, and the strong
Szego theorem gives their limit.  On the sphere the mean-normalized
``B_n`` tends to half the Dirichlet energy; a polynomial fit in ``1/(n+1)``
extrapolates it.
"""

from mtlab.funcspace import dirichlet_energy, make_family
from mtlab.harness import d0_asymptotic
from mtlab.szego import monotonicity_scan, random_trig_polynomial, strong_szego_constant

# %%
phi = random_trig_polynomial(4, seed=3, mean=0.2)
scan = monotonicity_scan(phi, 64)
print("circle: nondecreasing:", scan.monotone, " B_64 - 65 mean =", scan.normalized[-1])
print("        strong Szego constant:", strong_szego_constant(phi))

# %%
psi = make_family({"type": "random", "L_max": 4, "energy": 1.0, "seed": 7})
rep = d0_asymptotic(psi, [16, 32, 64, 128])
for n, g in zip(rep.n, rep.gaps):
    print(f"sphere: n = {n:3d}   B_n - (n+1) mean = {g:.6f}")
print(f"extrapolated D_0 = {rep.D0:.6f},  E/2 = {0.5 * dirichlet_energy(psi):.6f}")
