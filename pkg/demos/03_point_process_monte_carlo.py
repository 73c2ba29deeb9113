"""
B_n as a point-process expectation
==================================

``exp B_n(phi)`` is the expectation of ``exp(sum phi(z_i))`` when the
``n+1`` points follow the determinantal law with density
``prod sin^2(d_ij/2)``.  That law is the spherical ensemble: eigenvalues of
``B^{-1} A`` for independent complex Ginibre matrices.  We sample it and
compare the Monte-Carlo estimate with the determinant.
"""

import numpy as np

from mtlab.funcspace import make_family
from mtlab.gram import log_det_B
from mtlab.montecarlo import mc_estimate_B, normalization_check, sample_batch
from mtlab.sphere import build_quadrature

# %%
print("normalization by tensor quadrature:", [normalization_check(n, build_quadrature(6)) for n in range(3)])

# %%
# Points repel: for n = 1 the mean of sin^2(d/2) is 2/3 rather than 1/2.
u = sample_batch(1, 20000, seed=0)
print("E sin^2(d/2), n = 1:", np.mean(0.25 * np.sum((u[:, 0] - u[:, 1]) ** 2, axis=-1)))

# %%
phi = make_family("dipole:1")
for n in (1, 4, 6):
    est, se = mc_estimate_B(n, phi, 50_000, seed=n)
    exact = log_det_B(n, phi)
    print(f"n = {n}: MC {est:.5f} +/- {se:.5f}, determinant {exact:.5f}, z = {(est - exact) / se:+.2f}")
