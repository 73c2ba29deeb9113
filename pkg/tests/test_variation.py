import math

import numpy as np
import pytest
from scipy.integrate import quad

from mtlab.funcspace import BandLimitedFunction, evaluate, lm_index, make_family
from mtlab.gram import functional_A
from mtlab.sphere import build_quadrature
from mtlab.variation import (
    bergman_density,
    euler_residual,
    g_function,
    g_integral_identity,
    gradient_A,
    hessian_eigenvalue_at_zero,
    hessian_form,
    hessian_spectrum,
    jn_claim_check,
    jn_direct,
    jn_recursive,
    kernel_identity_check,
    partition_of_unity,
    second_variation,
)

J0 = math.pi**2 / 8 - 0.5
J1 = 0.8505508252042547  # by direct quadrature and by the recursion (see test below)


def rand(L, seed, energy=1.0, m=0.0):
    return make_family({"type": "random", "L_max": L, "energy": energy, "seed": seed, "mean": m})


def A(n, phi, deg):
    return functional_A(n, phi, deg).A


def test_partition_of_unity():
    t = np.linspace(-1, 1, 11)
    assert np.allclose(partition_of_unity(6, t), 7.0)


def test_bergman_density_integrates_to_n_plus_one():
    phi = rand(4, 3, energy=2.0)
    for n in (0, 3, 7):
        r = build_quadrature(2 * n + 40)
        rho = bergman_density(n, evaluate(phi, r))
        assert abs(r.weights @ rho - (n + 1)) < 1e-11


def test_zero_is_critical():
    for n in (0, 2, 6):
        R = euler_residual(n, BandLimitedFunction.zeros(3))
        assert np.abs(R.values).max() < 1e-8
        assert np.abs(gradient_A(n, BandLimitedFunction.zeros(0), L_max=5).coeffs).max() < 1e-8


@pytest.mark.parametrize("seed", range(4))
def test_first_variation_matches_central_difference(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 5))
    phi = rand(3, seed, energy=float(rng.uniform(0.5, 3)))
    f = rand(3, 100 + seed, energy=1.0, m=float(rng.normal()))
    deg = 40
    R = euler_residual(n, phi, deg)
    analytic = float(R.rule.weights @ (R.values * evaluate(f, R.rule).values))
    h = 1e-5
    fd = (A(n, phi + h * f, deg) - A(n, phi - h * f, deg)) / (2 * h)
    assert abs(analytic - fd) < 1e-5
    g = gradient_A(n, phi, degree=deg)
    assert abs(g.coeffs @ f.coeffs - fd) < 1e-5


@pytest.mark.parametrize("seed", range(4))
def test_second_variation_matches_central_difference(seed):
    rng = np.random.default_rng(10 + seed)
    n = int(rng.integers(0, 5))
    phi = rand(3, seed, energy=float(rng.uniform(0.5, 3)))
    f = rand(3, 200 + seed, energy=1.0)
    deg = 40
    h = 1e-3
    fd = (A(n, phi + h * f, deg) - 2 * A(n, phi, deg) + A(n, phi - h * f, deg)) / h**2
    assert abs(second_variation(n, phi, f, deg) - fd) < 1e-4


def test_weighted_variant_differs_away_from_zero():
    phi = rand(3, 1, energy=2.0)
    f = rand(3, 2)
    a = second_variation(2, phi, f, 40)
    b = second_variation(2, phi, f, 40, energy_weight="weighted")
    assert abs(a - b) > 1e-3
    z = BandLimitedFunction.zeros(0)
    assert abs(second_variation(2, z, f) - second_variation(2, z, f, energy_weight="weighted")) < 1e-10
    with pytest.raises(ValueError):
        second_variation(2, z, f, energy_weight="bogus")


def test_second_variation_examples():
    z = BandLimitedFunction.zeros(0)
    assert abs(second_variation(3, z, make_family("constant:1.3"))) < 1e-9
    c = np.zeros(4)
    c[lm_index(1, 0)] = 1.0
    assert second_variation(1, z, BandLimitedFunction(1, c)) <= 0


def test_hessian_closed_form_small_cases():
    # n = 0: Var(Y) - l(l+1) = 1 - l(l+1) for l >= 1, zero for the constant
    assert hessian_eigenvalue_at_zero(0, 0) == 0.0
    assert hessian_eigenvalue_at_zero(0, 1) == -1.0
    # n = 1, l = 1: lam_1 = 1!^2/(0! 3!) = 1/6; 2(1 - 2/6) - 2 = -2/3
    assert abs(hessian_eigenvalue_at_zero(1, 1) + 2 / 3) < 1e-15


@pytest.mark.parametrize("n", [0, 1, 3, 6, 12])
def test_hessian_spectrum_matches_closed_form(n):
    L = 10
    H = hessian_spectrum(n, L)
    expected = np.sort(np.concatenate([np.full(2 * l + 1, hessian_eigenvalue_at_zero(n, l)) for l in range(L + 1)]))
    assert np.allclose(H.eigenvalues, expected, atol=1e-9)
    zm = H.zero_mean_eigenvalues()
    assert zm.max() < 0
    assert abs(H.Q[0, 0]) < 1e-8 and np.abs(H.Q[0, 1:]).max() < 1e-8
    # only the constant direction is (numerically) non-negative
    assert np.sum(H.eigenvalues >= -1e-8) == 1
    top = H.eigenvectors[:, -1]
    assert abs(abs(top[0]) - 1) < 1e-8


def test_hessian_agrees_with_polarization():
    n, L = 3, 3
    phi = rand(2, 5, energy=1.5)
    deg = 40
    H = hessian_form(n, L, phi, deg)
    nb = (L + 1) ** 2
    rng = np.random.default_rng(0)
    for _ in range(4):
        a, b = rng.integers(0, nb, 2)
        ea, eb = np.zeros(nb), np.zeros(nb)
        ea[a] += 1.0
        eb[b] += 1.0
        fa, fb = BandLimitedFunction(L, ea), BandLimitedFunction(L, eb)
        q = 0.25 * (second_variation(n, phi, fa + fb, deg) - second_variation(n, phi, fa - fb, deg))
        assert abs(H.Q[a, b] - q) < 1e-10


def test_kernel_identity_variance_case():
    f = rand(4, 9, energy=2.0, m=0.5)
    lhs, rhs = kernel_identity_check(0, f)
    r = build_quadrature(20)
    v = evaluate(f, r).values
    var = r.weights @ v**2 - (r.weights @ v) ** 2
    assert abs(lhs - var) < 1e-12 and abs(rhs - var) < 1e-12


@pytest.mark.parametrize("n", [1, 3, 6, 8])
def test_kernel_identity_random(n):
    for seed in range(3):
        f = rand(8, 40 + seed + 10 * n, energy=1.0 + seed)
        lhs, rhs = kernel_identity_check(n, f)
        assert abs(lhs - rhs) < 1e-6 * (1 + abs(lhs))
        assert lhs <= 1.0 + seed + 1e-8


def test_kernel_identity_is_hessian_term():
    # lhs is sum_ij related to the first two Hessian terms at phi = 0
    n, L = 4, 3
    f = rand(L, 77)
    H = hessian_spectrum(n, L)
    lhs, _ = kernel_identity_check(n, f)
    from mtlab.funcspace import dirichlet_energy

    assert abs(f.coeffs @ H.Q @ f.coeffs - (lhs - dirichlet_energy(f))) < 1e-10


def test_g_function_examples():
    assert g_function(3, math.pi) == 0.0
    assert abs(g_function(0, 0.0) - math.pi) < 1e-13
    vals = [g_function(2, x) for x in np.linspace(0, math.pi, 9)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        g_function(1, 4.0)


@pytest.mark.parametrize("n", [0, 1, 3, 7])
def test_g_integral_identity(n):
    assert abs(g_integral_identity(n) - jn_direct(n)) < 1e-10


def test_jn_values():
    assert abs(jn_direct(0) - J0) < 1e-12
    assert abs(jn_recursive(1).values[1] - J1) < 1e-12
    assert abs(jn_direct(1) - J1) < 1e-12
    assert abs(J1 - 0.850559) < 1e-5
    assert J0 < 5 / 6
    # independent adaptive quadrature of the defining integral
    for n in (0, 1, 5, 20):
        ref, _ = quad(lambda t: 2 * (n + 1) * t * math.cos(t) ** (2 * n + 2), 0, math.pi / 2, epsabs=1e-15)
        assert abs(jn_direct(n) - ref) < 1e-12


def test_jn_direct_vs_recursive():
    table = jn_recursive(50).values
    direct = np.array([jn_direct(n) for n in range(51)])
    assert np.abs(table - direct).max() < 1e-10


def test_jn_claim_report():
    rep = jn_claim_check(20000)
    assert rep.all_below_one and rep.max_value < 1
    assert rep.monotone_from is not None
    assert rep.star_from is None
    assert abs(rep.decay_exponent + 1) < 0.01
    with pytest.raises(ValueError):
        jn_claim_check(10**6 + 1)
