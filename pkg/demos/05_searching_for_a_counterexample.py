"""
Searching for positive values of A_n
====================================

Gradient ascent from random starts never finds ``A_n > 0``; along rays of
growing energy ``A_n`` drops to minus infinity.  The last section shows a
limit of the rearrangement argument: the two-sided rotational
rearrangement can raise the Dirichlet energy.
"""

from mtlab.funcspace import (
    dirichlet_energy,
    make_family,
    profile_energy,
    rearrange_rotsym,
    rotate_max_to_equator,
)
from mtlab.harness import AscentOptions, conjecture_scan, large_energy_decay
from mtlab.sphere import build_quadrature

# %%
for n in (2, 4):
    rep = conjecture_scan(n, trials=5, seed=0, opts=AscentOptions(max_iter=30))
    finals = [f"{t['final_A']:.1e}" for t in rep.trials]
    print(f"n = {n}: max A over starts and ascents = {rep.max_A:.2e}; final values {finals}")

# %%
rep = large_energy_decay(4, make_family("dipole:1"), [1, 2, 5, 10, 20])
print("\nA_4(t u3):", {t: round(a, 3) for t, a in zip(rep.t, rep.A)})

# %%
# For phi = u1 (maximum on the equator) the rearranged function is 1 + 2t
# on the lower half and 1 - 2t on the upper half: energy 8/3, four times E(u1).
u1 = make_family({"type": "harmonic", "terms": [{"l": 1, "m": 1, "c": 3 ** -0.5}]})
for deg in (48, 192, 768):
    r = rearrange_rotsym(rotate_max_to_equator(u1, build_quadrature(deg)))
    print(f"degree {deg:3d}: E(phi*) = {profile_energy(r):.4f}   E(phi) = {dirichlet_energy(u1):.4f}")
