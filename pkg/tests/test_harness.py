import json
import math

import numpy as np
import pytest

from mtlab.funcspace import BandLimitedFunction, dirichlet_energy, make_family
from mtlab.gram import functional_A
from mtlab.harness import (
    AscentOptions,
    ascend,
    conjecture_scan,
    d0_asymptotic,
    large_energy_decay,
    rearrangement_check,
    working_degree,
    zonal_scan,
)


def rand(L, seed, energy=1.0, zonal=False):
    return make_family({"type": "random", "L_max": L, "energy": energy, "seed": seed, "zonal": zonal})


def dipole_with_energy(E, L=3):
    a = math.sqrt(1.5 * E)  # E(a u3) = 2a^2/3
    return make_family({"type": "dipole", "a": a, "L_max": L})


def test_working_degree_grows_with_amplitude():
    small, big = rand(3, 0, 0.1), rand(3, 0, 50.0)
    assert working_degree(4, big) > working_degree(4, small) >= 2 * 4 + 2 * 3 + 16


def test_ascent_from_zero_stops_immediately():
    tr = ascend(3, BandLimitedFunction.zeros(3))
    assert tr.reason == "converged" and tr.steps == [] and abs(tr.values[0]) < 1e-12


def test_ascent_small_start_converges_to_zero():
    tr = ascend(2, rand(3, 1, energy=0.1))
    assert tr.reason == "converged"
    assert abs(tr.values[-1]) < 1e-6
    assert np.abs(tr.final.coeffs).max() < 1e-3


def test_ascent_values_nondecreasing_and_mean_pinned():
    tr = ascend(3, rand(3, 2, energy=2.0) + 0.7, AscentOptions(max_iter=15))
    assert all(b >= a for a, b in zip(tr.values, tr.values[1:]))
    assert all(it[0] == 0.0 for it in tr.iterates)
    d = tr.as_dict(with_iterates=False)
    assert len(d["iterates"]) == 2 and d["values"] == tr.values


def test_ascent_from_dipole():
    tr = ascend(4, dipole_with_energy(4.0))
    assert tr.values[-1] <= 1e-6
    assert tr.values[-1] >= tr.values[0]


def test_zonal_ascent_stays_zonal():
    tr = ascend(3, rand(4, 3, energy=1.0), AscentOptions(max_iter=10, zonal=True))
    m = np.concatenate([np.arange(-l, l + 1) for l in range(5)])
    assert np.all(np.asarray(tr.iterates[-1])[m != 0] == 0.0)


def test_unpreconditioned_ascent_also_nondecreasing():
    tr = ascend(2, rand(2, 4, energy=1.0), AscentOptions(max_iter=10, precondition=False))
    assert all(b >= a for a, b in zip(tr.values, tr.values[1:]))


def test_conjecture_scan_small():
    rep = conjecture_scan(4, trials=3, seed=11, opts=AscentOptions(max_iter=20))
    assert len(rep.trials) == 3
    assert rep.max_A <= 1e-6 and not rep.violation and rep.candidates == []
    energies = [t["initial_energy"] for t in rep.trials]
    assert all(0.1 <= e <= 10 for e in energies)


def test_scan_reports_are_reproducible():
    a = conjecture_scan(2, trials=2, seed=5, opts=AscentOptions(max_iter=5)).as_dict()
    b = conjecture_scan(2, trials=2, seed=5, opts=AscentOptions(max_iter=5)).as_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_scan_n0_nonpositive():
    rep = conjecture_scan(0, trials=4, seed=0, opts=AscentOptions(max_iter=10))
    assert rep.max_A <= 1e-12


def test_constant_starts_give_zero():
    for n in (1, 5):
        assert abs(functional_A(n, make_family("constant:2.0")).A) < 1e-10
        tr = ascend(n, make_family({"type": "constant", "c": 2.0, "L_max": 2}))
        assert abs(tr.values[-1]) < 1e-10


def test_zonal_scan_diagonal():
    rep = zonal_scan(6, trials=3, seed=2, opts=AscentOptions(max_iter=10))
    assert rep.max_A <= 1e-6
    assert max(t["offdiag_max"] for t in rep.trials) < 1e-12


def test_zonal_scan_large_n():
    rep = zonal_scan(32, trials=2, seed=1, opts=AscentOptions(max_iter=5))
    assert rep.max_A <= 1e-6


def test_decay_ray():
    rep = large_energy_decay(4, make_family("dipole:1"), [1, 2, 5, 10])
    assert all(b < a for a, b in zip(rep.A[1:], rep.A[2:]))
    assert rep.decreasing_from is not None and rep.decreasing_from <= 2
    assert rep.A[-1] < -1
    with pytest.raises(ValueError):
        large_energy_decay(4, make_family("constant:1"), [1, 2])


def test_zonal_dipole_ray_consistent():
    phi = make_family("dipole:1")
    rep = large_energy_decay(3, phi, [2.0])
    assert rep.A[0] == functional_A(3, 2.0 * phi, working_degree(3, 2.0 * phi)).A


def test_d0_zero_and_dipole():
    rep = d0_asymptotic(BandLimitedFunction.zeros(2), [4, 8, 16])
    assert np.allclose(rep.gaps, 0.0, atol=1e-10)
    rep = d0_asymptotic(make_family("dipole:1"), [32, 64, 128])
    assert abs(rep.gaps[-1] - 1 / 3) < 0.01
    assert abs(rep.D0 - rep.half_energy) < 1e-3
    with pytest.raises(ValueError):
        d0_asymptotic(make_family("dipole:1"), [8, 4])


def test_d0_random():
    phi = rand(4, 7, energy=1.0)
    rep = d0_asymptotic(phi, [32, 64, 128])
    assert rep.terms == 3
    assert abs(rep.D0 - 0.5 * dirichlet_energy(phi)) < 1e-3


def test_rearrangement_check_inequalities():
    out = rearrangement_check(3, rand(3, 9, energy=2.0))
    for side in ("lower", "upper"):
        assert len(out[side]) == 4
        assert all(row["holds"] for row in out[side])
    assert abs(out["mean"] - out["rearranged_mean"]) < 1e-12
