"""Toeplitz determinants on the circle: the classical baseline.

``ds`` is arc length divided by ``2 pi``; the energy convention is
``int |phi'|^2 ds = sum_{k != 0} k^2 |phi_k|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .gram import cholesky_logdet

__all__ = [
    "CircleFunction",
    "ScanResult",
    "random_trig_polynomial",
    "toeplitz_B",
    "monotonicity_scan",
    "szego_gap",
    "strong_szego_constant",
]


@dataclass(frozen=True, eq=False)
class CircleFunction:
    """Real trigonometric polynomial from its coefficients ``phi_k``, ``k = 0..K_max``.

    Negative frequencies are implied by ``phi_{-k} = conj(phi_k)``.
    """

    K_max: int
    positive: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.positive, dtype=complex).ravel()
        if c.size != self.K_max + 1:
            raise ValueError(f"expected {self.K_max + 1} coefficients, got {c.size}")
        c[0] = c[0].real
        object.__setattr__(self, "positive", c)

    @property
    def fourier(self) -> np.ndarray:
        """Full coefficient vector for ``k = -K_max..K_max``."""
        return np.concatenate([np.conj(self.positive[:0:-1]), self.positive])

    @property
    def mean(self) -> float:
        return float(self.positive[0].real)

    def energy(self) -> float:
        k = np.arange(1, self.K_max + 1)
        return float(2.0 * np.sum(k**2 * np.abs(self.positive[1:]) ** 2))

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, self.K_max + 1)
        osc = np.exp(1j * np.multiply.outer(theta, k)) @ self.positive[1:]
        return self.mean + 2.0 * osc.real

    def __add__(self, c: float) -> CircleFunction:
        p = self.positive.copy()
        p[0] += float(c)
        return CircleFunction(self.K_max, p)


def random_trig_polynomial(K_max: int, seed: int, scale: float = 0.5, mean: float = 0.0) -> CircleFunction:
    rng = np.random.default_rng(seed)
    k = np.arange(1, K_max + 1)
    c = (rng.standard_normal(K_max) + 1j * rng.standard_normal(K_max)) * scale / k
    return CircleFunction(K_max, np.concatenate([[mean], c]))


def strong_szego_constant(phi: CircleFunction) -> float:
    """``sum_{k >= 1} k |phi_k|^2``, the limit of ``B_n - (n+1) phi_0``."""
    k = np.arange(1, phi.K_max + 1)
    return float(np.sum(k * np.abs(phi.positive[1:]) ** 2))


def _symbol_moments(phi: CircleFunction, n: int, P: int) -> np.ndarray:
    """``(e^phi)^hat(m)`` for ``m = 0..n`` by the ``P``-point trapezoidal rule."""
    theta = 2.0 * np.pi * np.arange(P) / P
    vals = np.exp(phi(theta))
    return np.fft.fft(vals)[: n + 1] / P


def _logdet(phi: CircleFunction, n: int, P: int) -> float:
    c = _symbol_moments(phi, n, P)
    # T[j, k] = hat(j - k): first column hat(0..n), first row conj of it
    return cholesky_logdet(toeplitz(c, np.conj(c)))


def toeplitz_B(n: int, phi: CircleFunction, tol: float = 1e-10, max_doublings: int = 6) -> float:
    """``log det [int z^(j-k) e^phi ds]`` of size ``n+1``.

    The Fourier moments start from ``8 (n + K_max)`` trapezoidal points and
    the resolution is doubled until the value changes by less than ``tol``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    P = max(8 * (n + phi.K_max), 16)
    val = _logdet(phi, n, P)
    for _ in range(max_doublings):
        P *= 2
        nxt = _logdet(phi, n, P)
        if abs(nxt - val) < tol:
            return nxt
        val = nxt
    raise ArithmeticError(f"Toeplitz determinant did not stabilize for n = {n}")


@dataclass(frozen=True)
class ScanResult:
    values: list[float]
    normalized: list[float]
    monotone: bool
    worst_step: float


def monotonicity_scan(phi: CircleFunction, N: int, tol: float = 1e-10) -> ScanResult:
    """``B_0..B_N`` and whether ``B_n - (n+1) phi_0`` is nondecreasing.

    The mean is removed before testing because ``B_n`` itself shifts by
    ``(n+1) c`` under ``phi -> phi + c``.
    """
    vals = [toeplitz_B(n, phi) for n in range(N + 1)]
    norm = [v - (n + 1) * phi.mean for n, v in enumerate(vals)]
    steps = np.diff(norm)
    worst = float(steps.min()) if steps.size else 0.0
    return ScanResult(vals, norm, bool(worst >= -tol), worst)


def szego_gap(n: int, phi: CircleFunction) -> float:
    """``(1/2) int |phi'|^2 ds + (n+1) phi_0 - B_n``; nonnegative, zero iff constant."""
    return 0.5 * phi.energy() + (n + 1) * phi.mean - toeplitz_B(n, phi)
