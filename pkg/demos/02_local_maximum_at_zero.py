"""
Zero is a strict local maximum
==============================

At ``phi = 0`` the second variation of ``A_n`` is diagonal in spherical
harmonic degree.  Its eigenvalue on degree ``l`` is
``(n+1)(1 - (n+1) lam_l) - l(l+1)`` with ``lam_l = n!^2/((n-l)!(n+l+1)!)``.
We compare the numerically assembled Hessian with that formula and look at
the scalar ``J_n`` that controls the bound.
"""

import numpy as np

from mtlab.variation import (
    hessian_eigenvalue_at_zero,
    hessian_spectrum,
    jn_claim_check,
    jn_recursive,
)

# %%
L = 8
for n in (1, 4, 12):
    H = hessian_spectrum(n, L)
    exact = [hessian_eigenvalue_at_zero(n, l) for l in range(L + 1)]
    top = H.zero_mean_eigenvalues().max()
    print(f"n = {n:2d}: top eigenvalue off the constants {top:.6f}, formula at l = 1: {exact[1]:.6f}")
    print("        by degree:", np.round(exact, 4))

# %%
# ``J_n`` stays below 1 and approaches it like ``1/(3(n+1))``.
J = jn_recursive(10).values
print("\nJ_0..J_10:", np.round(J, 6))
rep = jn_claim_check(100_000)
print(f"max J_n for n <= 1e5: {rep.max_value:.8f}; 1 - J_n ~ {rep.decay_constant:.4f} (n+1)^{rep.decay_exponent:.4f}")
