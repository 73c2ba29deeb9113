import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import toeplitz
from scipy.special import iv

from mtlab.szego import (
    CircleFunction,
    monotonicity_scan,
    random_trig_polynomial,
    strong_szego_constant,
    szego_gap,
    toeplitz_B,
)


def two_cos(a=1.0, mean=0.0):
    return CircleFunction(1, [mean, a])  # phi = mean + 2a cos(theta)


def test_circle_function_basics():
    phi = CircleFunction(2, [0.5, 0.3 + 0.1j, -0.2j])
    th = np.linspace(0, 2 * np.pi, 7)
    expect = 0.5 + 2 * np.real((0.3 + 0.1j) * np.exp(1j * th) + (-0.2j) * np.exp(2j * th))
    assert np.allclose(phi(th), expect)
    assert phi.mean == 0.5
    assert abs(phi.energy() - 2 * (0.1 + 4 * 0.04)) < 1e-15
    assert len(phi.fourier) == 5
    assert (phi + 1.0).mean == 1.5
    with pytest.raises(ValueError):
        CircleFunction(2, [1.0, 2.0])


def test_energy_is_derivative_integral():
    phi = random_trig_polynomial(4, seed=1)
    th = 2 * np.pi * np.arange(256) / 256
    k = np.arange(1, 5)
    dphi = 2 * np.real(np.exp(1j * np.outer(th, k)) @ (1j * k * phi.positive[1:]))
    assert abs(np.mean(dphi**2) - phi.energy()) < 1e-12


def test_trivial_values():
    assert abs(toeplitz_B(5, CircleFunction(0, [0.0]))) < 1e-14
    assert abs(toeplitz_B(5, CircleFunction(0, [0.7])) - 6 * 0.7) < 1e-12
    with pytest.raises(ValueError):
        toeplitz_B(-1, two_cos())


def test_bessel_oracle():
    # e^{2a cos} has Fourier coefficients I_k(2a)
    n, a = 8, 1.0
    T = toeplitz(iv(np.arange(n + 1), 2 * a))
    assert abs(toeplitz_B(n, two_cos(a)) - np.linalg.slogdet(T)[1]) < 1e-12


def test_direct_quadrature_oracle():
    phi = random_trig_polynomial(3, seed=2, mean=0.1)
    n = 4
    c = [
        quad(lambda th: math.exp(phi(th)) * math.cos(k * th), 0, 2 * math.pi, epsabs=1e-14)[0] / (2 * math.pi)
        - 1j * quad(lambda th: math.exp(phi(th)) * math.sin(k * th), 0, 2 * math.pi, epsabs=1e-14)[0] / (2 * math.pi)
        for k in range(n + 1)
    ]
    T = toeplitz(c, np.conj(c))
    assert abs(toeplitz_B(n, phi) - np.linalg.slogdet(T)[1]) < 1e-9


def test_zero_scan():
    scan = monotonicity_scan(CircleFunction(0, [0.0]), 10)
    assert np.allclose(scan.values, 0.0) and scan.monotone


def test_two_cos_monotone_to_limit():
    phi = two_cos()
    scan = monotonicity_scan(phi, 64)
    assert scan.monotone
    assert abs(scan.normalized[-1] - strong_szego_constant(phi)) < 1e-10
    assert strong_szego_constant(phi) == 1.0


def test_gap_examples():
    assert abs(szego_gap(7, CircleFunction(0, [2.0]))) < 1e-12
    assert szego_gap(16, two_cos()) > 0
    phi = random_trig_polynomial(4, seed=3, scale=0.4)
    limit = float(np.sum((np.arange(1, 5) ** 2 - np.arange(1, 5)) * np.abs(phi.positive[1:]) ** 2))
    gaps = [szego_gap(n, phi) for n in (1, 4, 16, 64)]
    assert all(a >= b - 1e-12 for a, b in zip(gaps, gaps[1:]))
    assert abs(gaps[-1] - limit) < 1e-8


@pytest.mark.parametrize("seed", range(10))
def test_random_polynomials_monotone(seed):
    phi = random_trig_polynomial(4, seed=seed, mean=0.3)
    scan = monotonicity_scan(phi, 64)
    assert scan.monotone
    assert abs(scan.values[-1] - 65 * phi.mean - strong_szego_constant(phi)) < 1e-6
    assert all(szego_gap(n, phi) >= -1e-9 for n in (0, 8, 32))
