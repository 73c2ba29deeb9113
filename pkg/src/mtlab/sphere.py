"""Geometry of the Riemann sphere and product quadrature for the normalized
Fubini-Study (area) measure.

Conventions
-----------
The stereographic chart sends ``z = 0`` to the south pole ``(0, 0, -1)`` and
``z = inf`` to the north pole, with

    u3 = (|z|^2 - 1) / (|z|^2 + 1),    u1 + i u2 = 2 z / (1 + |z|^2).

The measure ``mu`` is the rotation invariant probability measure, i.e. the
unit-sphere area element divided by ``4 pi``.  In the height coordinate
``t = u3`` it is ``dt/2 * dtheta/(2 pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "INF",
    "SpherePoint",
    "QuadratureRule",
    "from_stereographic",
    "from_unit_vector",
    "to_stereographic",
    "geodesic_distance",
    "chordal_sin2",
    "build_quadrature",
    "integrate",
    "unit_vectors_to_stereographic",
    "stereographic_to_unit_vectors",
]


class _Infinity:
    """The point at infinity of the extended complex plane."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def _is_infinite(z) -> bool:
    if z is INF:
        return True
    z = complex(z)
    return math.isinf(z.real) or math.isinf(z.imag)


@dataclass(frozen=True)
class SpherePoint:
    """A point on S^2, carried both as a unit vector and a chart value."""

    u: tuple[float, float, float]
    z: complex | _Infinity

    @property
    def t(self) -> float:
        return self.u[2]

    @property
    def azimuth(self) -> float:
        return math.atan2(self.u[1], self.u[0])

    @property
    def is_infinity(self) -> bool:
        return self.z is INF


def from_stereographic(z) -> SpherePoint:
    """Point of S^2 with stereographic coordinate ``z`` (``INF`` allowed)."""
    if _is_infinite(z):
        return SpherePoint((0.0, 0.0, 1.0), INF)
    z = complex(z)
    r2 = z.real * z.real + z.imag * z.imag
    if r2 > 1e200:
        # |z|^2 would overflow; the point is the north pole to double precision
        return SpherePoint((0.0, 0.0, 1.0), z)
    d = 1.0 + r2
    u = (2.0 * z.real / d, 2.0 * z.imag / d, (r2 - 1.0) / d)
    return SpherePoint(u, z)


def from_unit_vector(u) -> SpherePoint:
    """Point of S^2 from a (not necessarily normalized) nonzero 3-vector."""
    u = np.asarray(u, dtype=float)
    nrm = np.linalg.norm(u)
    if not nrm > 0:
        raise ValueError("zero vector is not a point of S^2")
    u = u / nrm
    return SpherePoint(tuple(float(c) for c in u), to_stereographic(u))


def to_stereographic(u):
    """Chart value of a unit vector; the north pole maps to ``INF``."""
    u1, u2, u3 = (float(c) for c in u)
    if u3 >= 1.0 or (u1 == 0.0 and u2 == 0.0 and u3 > 0.0):
        return INF
    # 1 - u3 loses accuracy near the north pole; use (u1^2 + u2^2)/(1 + u3)
    if u3 > 0.0:
        denom = (u1 * u1 + u2 * u2) / (1.0 + u3)
    else:
        denom = 1.0 - u3
    return complex(u1, u2) / denom


def unit_vectors_to_stereographic(u: np.ndarray) -> np.ndarray:
    """Vectorized chart for an ``(..., 3)`` array; the north pole gives ``inf``."""
    u = np.asarray(u, dtype=float)
    u1, u2, u3 = u[..., 0], u[..., 1], u[..., 2]
    rho2 = u1 * u1 + u2 * u2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = np.where(u3 > 0.0, rho2 / (1.0 + u3), 1.0 - u3)
        z = (u1 + 1j * u2) / denom
    return np.where(denom == 0.0, complex(np.inf, 0.0), z)


def stereographic_to_unit_vectors(z: np.ndarray) -> np.ndarray:
    """Vectorized inverse chart; ``inf`` entries map to the north pole."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape + (3,))
    infinite = ~np.isfinite(z)
    zz = np.where(infinite, 0.0, z)
    r2 = zz.real**2 + zz.imag**2
    d = 1.0 + r2
    out[..., 0] = 2.0 * zz.real / d
    out[..., 1] = 2.0 * zz.imag / d
    out[..., 2] = (r2 - 1.0) / d
    out[infinite] = (0.0, 0.0, 1.0)
    return out


def geodesic_distance(x: SpherePoint, y: SpherePoint) -> float:
    """Great-circle distance on the unit round sphere, in ``[0, pi]``."""
    ux, uy = np.asarray(x.u), np.asarray(y.u)
    # atan2 form keeps full accuracy near 0 and pi, unlike arccos of the dot
    cross = np.linalg.norm(np.cross(ux, uy))
    return float(math.atan2(cross, float(ux @ uy)))


def chordal_sin2(x: SpherePoint, y: SpherePoint) -> float:
    """``sin^2(d/2)`` computed from chart values, ``|zx - zy|^2/((1+|zx|^2)(1+|zy|^2))``."""
    if x.is_infinity and y.is_infinity:
        return 0.0
    if x.is_infinity or y.is_infinity:
        w = y.z if x.is_infinity else x.z
        return 1.0 / (1.0 + abs(w) ** 2)
    zx, zy = complex(x.z), complex(y.z)
    return abs(zx - zy) ** 2 / ((1.0 + abs(zx) ** 2) * (1.0 + abs(zy) ** 2))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre in ``t = u3`` times a uniform azimuthal rule.

    Nodes are stored ring-major: node ``k = r * n_azimuth + j`` sits at height
    ``t[r]`` and azimuth ``2 pi j / n_azimuth``.
    """

    degree: int
    t: np.ndarray = field(repr=False)
    ring_weights: np.ndarray = field(repr=False)
    n_azimuth: int

    @property
    def n_rings(self) -> int:
        return len(self.t)

    @property
    def size(self) -> int:
        return self.n_rings * self.n_azimuth

    @cached_property
    def azimuths(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_azimuth) / self.n_azimuth

    @cached_property
    def node_t(self) -> np.ndarray:
        return np.repeat(self.t, self.n_azimuth)

    @cached_property
    def node_theta(self) -> np.ndarray:
        return np.tile(self.azimuths, self.n_rings)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.repeat(self.ring_weights / self.n_azimuth, self.n_azimuth)

    @cached_property
    def unit_vectors(self) -> np.ndarray:
        s = np.sqrt(1.0 - self.node_t**2)
        th = self.node_theta
        return np.stack([s * np.cos(th), s * np.sin(th), self.node_t], axis=-1)

    @property
    def nodes(self) -> list[SpherePoint]:
        return [from_unit_vector(u) for u in self.unit_vectors]

    def ring_view(self, values: np.ndarray) -> np.ndarray:
        """Reshape node values to ``(n_rings, n_azimuth)``."""
        return np.asarray(values).reshape(self.n_rings, self.n_azimuth)


def build_quadrature(degree: int, azimuthal_count: int | None = None) -> QuadratureRule:
    """Product rule exact for spherical harmonics up to ``degree``.

    Parameters
    ----------
    degree : int
        Polynomial exactness degree, at least 1.
    azimuthal_count : int, optional
        Number of equispaced azimuths; defaults to ``2 * degree + 1``, which
        is also the minimum accepted.
    """
    degree = int(degree)
    if degree <= 0:
        raise ValueError(f"quadrature degree must be positive, got {degree}")
    if azimuthal_count is None:
        azimuthal_count = 2 * degree + 1
    if azimuthal_count < 2 * degree + 1:
        raise ValueError(
            f"azimuthal_count {azimuthal_count} below 2*degree+1 = {2 * degree + 1}"
        )
    n_t = (degree + 2) // 2 + 1  # ceil((degree + 1)/2) + 1
    t, w = np.polynomial.legendre.leggauss(n_t)
    w = w / w.sum()
    return QuadratureRule(degree=degree, t=t, ring_weights=w, n_azimuth=int(azimuthal_count))


def integrate(rule: QuadratureRule, values) -> complex | float:
    """Weighted node sum ``sum_k w_k values_k``."""
    values = np.asarray(values)
    if values.shape[0] != rule.size:
        raise ValueError(f"got {values.shape[0]} values for a rule with {rule.size} nodes")
    out = np.tensordot(rule.weights, values, axes=(0, 0))
    return out.item() if out.ndim == 0 else out
