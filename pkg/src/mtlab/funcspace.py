"""Band-limited conformal factors on S^2.

A function is stored through its coefficients in the real spherical harmonic
basis that is orthonormal for ``mu`` (so ``Y_00 = 1`` and
``Y_10 = sqrt(3) t``).  Coefficient ``c[l, m]`` lives at flat index
``l*l + l + m``; ``m > 0`` carries ``cos(m theta)`` and ``m < 0`` carries
``sin(|m| theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sphere import QuadratureRule, build_quadrature

__all__ = [
    "BandLimitedFunction",
    "GridFunction",
    "Rearrangement",
    "HemisphereProfile",
    "lm_index",
    "degree_of_index",
    "legendre_normalized",
    "harmonic_basis",
    "evaluate",
    "evaluate_at",
    "analyze",
    "dirichlet_energy",
    "mean",
    "laplacian",
    "grad_norm_sq",
    "make_family",
    "parse_family",
    "rotate_max_to_equator",
    "rearrange_rotsym",
    "profile_energy",
]


def lm_index(l: int, m: int) -> int:
    return l * l + l + m


def degree_of_index(L_max: int) -> np.ndarray:
    """Degree ``l`` of every flat coefficient slot up to ``L_max``."""
    return np.concatenate([np.full(2 * l + 1, l) for l in range(L_max + 1)])


@dataclass(frozen=True, eq=False)
class BandLimitedFunction:
    L_max: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size != (self.L_max + 1) ** 2:
            raise ValueError(f"expected {(self.L_max + 1) ** 2} coefficients, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, L_max: int) -> BandLimitedFunction:
        return cls(L_max, np.zeros((L_max + 1) ** 2))

    def coeff(self, l: int, m: int) -> float:
        return float(self.coeffs[lm_index(l, m)])

    def with_coeffs(self, coeffs) -> BandLimitedFunction:
        return BandLimitedFunction(self.L_max, coeffs)

    def resized(self, L_max: int) -> BandLimitedFunction:
        """Zero-pad or truncate to a new degree cap."""
        out = np.zeros((L_max + 1) ** 2)
        k = min(out.size, self.coeffs.size)
        out[:k] = self.coeffs[:k]
        return BandLimitedFunction(L_max, out)

    def __add__(self, other):
        if isinstance(other, BandLimitedFunction):
            L = max(self.L_max, other.L_max)
            return BandLimitedFunction(L, self.resized(L).coeffs + other.resized(L).coeffs)
        c = self.coeffs.copy()
        c[0] += float(other)
        return BandLimitedFunction(self.L_max, c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return BandLimitedFunction(self.L_max, float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self


@dataclass(frozen=True, eq=False)
class GridFunction:
    rule: QuadratureRule
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.rule.size:
            raise ValueError(f"{v.size} values for a rule with {self.rule.size} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        return float(self.rule.weights @ self.values)


def legendre_normalized(L_max: int, t) -> np.ndarray:
    """Associated Legendre functions scaled so that ``(1/2) int P^2 dt = 1``.

    Returns an array of shape ``(L_max + 1, L_max + 1) + t.shape`` indexed
    ``[l, m]`` (zero for ``m > l``), built with the standard normalized
    three-term recurrence in ``l`` for each ``m``.
    """
    t = np.asarray(t, dtype=float)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    P = np.zeros((L_max + 1, L_max + 1) + t.shape)
    P[0, 0] = 1.0
    for m in range(1, L_max + 1):
        P[m, m] = np.sqrt((2 * m + 1) / (2 * m)) * s * P[m - 1, m - 1]
    for m in range(L_max):
        P[m + 1, m] = np.sqrt(2 * m + 3) * t * P[m, m]
    for m in range(L_max + 1):
        for l in range(m + 2, L_max + 1):
            a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            P[l, m] = a * (t * P[l - 1, m] - b * P[l - 2, m])
    return P


def harmonic_basis(L_max: int, t, theta) -> np.ndarray:
    """Matrix of ``Y_lm`` at the given points, shape ``(npoints, (L_max+1)^2)``."""
    t = np.asarray(t, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    P = legendre_normalized(L_max, t)
    out = np.empty((t.size, (L_max + 1) ** 2))
    root2 = np.sqrt(2.0)
    for m in range(L_max + 1):
        if m == 0:
            for l in range(L_max + 1):
                out[:, lm_index(l, 0)] = P[l, 0]
            continue
        c = root2 * np.cos(m * theta)
        sn = root2 * np.sin(m * theta)
        for l in range(m, L_max + 1):
            out[:, lm_index(l, m)] = P[l, m] * c
            out[:, lm_index(l, -m)] = P[l, m] * sn
    return out


def _ring_basis(L_max: int, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    """Legendre part per ring and Fourier part per azimuth, for fast transforms."""
    P = legendre_normalized(L_max, rule.t)  # (L+1, L+1, n_rings)
    return P, rule.azimuths


def evaluate(phi: BandLimitedFunction, rule: QuadratureRule) -> GridFunction:
    """Synthesize ``phi`` on the nodes of a product rule."""
    if rule.degree < phi.L_max:
        raise ValueError(f"rule degree {rule.degree} below L_max {phi.L_max}")
    L = phi.L_max
    P, th = _ring_basis(L, rule)
    c = phi.coeffs
    root2 = np.sqrt(2.0)
    vals = np.zeros((rule.n_rings, rule.n_azimuth))
    for m in range(L + 1):
        ls = np.arange(m, L + 1)
        if m == 0:
            vals += (c[ls * ls + ls] @ P[ls, 0])[:, None]
            continue
        a = root2 * (c[ls * ls + ls + m] @ P[ls, m])
        b = root2 * (c[ls * ls + ls - m] @ P[ls, m])
        vals += np.outer(a, np.cos(m * th)) + np.outer(b, np.sin(m * th))
    return GridFunction(rule, vals.ravel())


def evaluate_at(phi: BandLimitedFunction, u: np.ndarray) -> np.ndarray:
    """Values of ``phi`` at arbitrary unit vectors ``u`` of shape ``(..., 3)``."""
    u = np.asarray(u, dtype=float)
    shape = u.shape[:-1]
    flat = u.reshape(-1, 3)
    t = np.clip(flat[:, 2], -1.0, 1.0)
    theta = np.arctan2(flat[:, 1], flat[:, 0])
    return (harmonic_basis(phi.L_max, t, theta) @ phi.coeffs).reshape(shape)


def analyze(g: GridFunction, L_max: int) -> BandLimitedFunction:
    """Project grid values onto harmonics of degree ``<= L_max`` by quadrature."""
    rule = g.rule
    if rule.degree < 2 * L_max:
        raise ValueError(f"rule degree {rule.degree} below 2*L_max = {2 * L_max}")
    P, th = _ring_basis(L_max, rule)
    wv = rule.ring_view(g.values) * rule.ring_weights[:, None] / rule.n_azimuth
    # azimuthal moments per ring first, then the Legendre sums
    out = np.zeros((L_max + 1) ** 2)
    root2 = np.sqrt(2.0)
    for m in range(L_max + 1):
        ls = np.arange(m, L_max + 1)
        if m == 0:
            ring = wv.sum(axis=1)
            out[ls * ls + ls] = P[ls, 0] @ ring
            continue
        rc = root2 * (wv @ np.cos(m * th))
        rs = root2 * (wv @ np.sin(m * th))
        out[ls * ls + ls + m] = P[ls, m] @ rc
        out[ls * ls + ls - m] = P[ls, m] @ rs
    return BandLimitedFunction(L_max, out)


def dirichlet_energy(phi: BandLimitedFunction) -> float:
    """``sum l(l+1) c_lm^2``, i.e. ``(1/4pi) int |grad phi|^2 dA`` on the unit sphere."""
    l = degree_of_index(phi.L_max)
    return float(np.sum(l * (l + 1) * phi.coeffs**2))


def mean(phi: BandLimitedFunction) -> float:
    return float(phi.coeffs[0])


def laplacian(phi: BandLimitedFunction) -> BandLimitedFunction:
    """Unit-sphere Laplace-Beltrami operator, applied spectrally."""
    l = degree_of_index(phi.L_max)
    return BandLimitedFunction(phi.L_max, -l * (l + 1) * phi.coeffs)


def grad_norm_sq(f: BandLimitedFunction, rule: QuadratureRule) -> GridFunction:
    """Pointwise ``|grad f|^2`` on the nodes, via ``|grad f|^2 = Lap(f^2)/2 - f Lap f``.

    ``f^2`` has degree ``2 L_max``, so the rule must resolve ``4 L_max``.
    """
    L2 = 2 * f.L_max
    aux = build_quadrature(max(2 * L2, 1))
    f2 = analyze(GridFunction(aux, evaluate(f, aux).values ** 2), L2)
    lap_f2 = evaluate(laplacian(f2), rule).values
    fv = evaluate(f, rule).values
    lap_f = evaluate(laplacian(f), rule).values
    return GridFunction(rule, 0.5 * lap_f2 - fv * lap_f)


# --------------------------------------------------------------------------
# families


def make_family(spec) -> BandLimitedFunction:
    """Build a conformal factor from a family descriptor.

    Descriptors are mappings with a ``type`` key:

    * ``{"type": "constant", "c": 3.0}``
    * ``{"type": "dipole", "a": 1.0}`` -- ``phi = a * u3``
    * ``{"type": "zonal", "coeffs": [c0, c1, ...]}`` -- coefficients of ``Y_l0``
    * ``{"type": "harmonic", "terms": [{"l": 1, "m": 0, "c": 0.5}, ...]}``
    * ``{"type": "random", "L_max": 4, "energy": 2.0, "seed": 0}``, optional
      ``"mean"`` and ``"zonal": true``

    Strings such as ``"dipole:1"`` are accepted through :func:`parse_family`.
    """
    if isinstance(spec, str):
        spec = parse_family(spec)
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValueError(f"family descriptor must be a mapping with a 'type': {spec!r}")
    kind = spec["type"]
    if kind == "constant":
        L = int(spec.get("L_max", 0))
        c = np.zeros((L + 1) ** 2)
        c[0] = float(spec.get("c", 0.0))
        return BandLimitedFunction(L, c)
    if kind == "dipole":
        L = int(spec.get("L_max", 1))
        c = np.zeros((L + 1) ** 2)
        c[lm_index(1, 0)] = float(spec.get("a", 1.0)) / np.sqrt(3.0)
        return BandLimitedFunction(L, c)
    if kind == "zonal":
        cz = [float(x) for x in spec["coeffs"]]
        L = max(int(spec.get("L_max", len(cz) - 1)), len(cz) - 1, 0)
        c = np.zeros((L + 1) ** 2)
        for l, v in enumerate(cz):
            c[lm_index(l, 0)] = v
        return BandLimitedFunction(L, c)
    if kind == "harmonic":
        terms = spec["terms"]
        L = max([int(t["l"]) for t in terms] + [int(spec.get("L_max", 0))])
        c = np.zeros((L + 1) ** 2)
        for term in terms:
            l, m = int(term["l"]), int(term["m"])
            if abs(m) > l:
                raise ValueError(f"|m| > l in harmonic term {term}")
            c[lm_index(l, m)] += float(term["c"])
        return BandLimitedFunction(L, c)
    if kind == "random":
        L = int(spec.get("L_max", 4))
        if L < 1:
            raise ValueError("random family needs L_max >= 1")
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        l = degree_of_index(L)
        c = rng.standard_normal(l.size) / (1.0 + l)
        c[0] = 0.0
        if spec.get("zonal", False):
            m = np.concatenate([np.arange(-k, k + 1) for k in range(L + 1)])
            c[m != 0] = 0.0
        energy = float(np.sum(l * (l + 1) * c**2))
        target = float(spec.get("energy", 1.0))
        c *= np.sqrt(target / energy)
        c[0] = float(spec.get("mean", 0.0))
        return BandLimitedFunction(L, c)
    raise ValueError(f"unknown family type {kind!r}")


def parse_family(text: str) -> dict:
    """Parse the compact ``kind:args`` form used on the command line.

    ``constant:3``, ``dipole:1``, ``zonal:0,0.5,0.1``,
    ``random:L_max=4,energy=2,seed=7``.
    """
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind == "constant":
        return {"type": "constant", "c": float(rest or 0.0)}
    if kind == "dipole":
        return {"type": "dipole", "a": float(rest or 1.0)}
    if kind == "zonal":
        return {"type": "zonal", "coeffs": [float(x) for x in rest.split(",") if x]}
    if kind == "random":
        out = {"type": "random"}
        for item in filter(None, rest.split(",")):
            key, _, val = item.partition("=")
            key = key.strip()
            if key in ("L_max", "seed"):
                out[key] = int(val)
            elif key in ("energy", "mean"):
                out[key] = float(val)
            elif key == "zonal":
                out[key] = val.strip().lower() in ("1", "true", "yes")
            else:
                raise ValueError(f"unknown random-family field {key!r}")
        return out
    raise ValueError(f"unknown family descriptor {text!r}")


# --------------------------------------------------------------------------
# rearrangement


def _rotation_to(u_from: np.ndarray, u_to: np.ndarray) -> np.ndarray:
    """Rotation matrix taking unit vector ``u_from`` to ``u_to`` (Rodrigues)."""
    v = np.cross(u_from, u_to)
    c = float(u_from @ u_to)
    s = np.linalg.norm(v)
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        # antipodal: rotate by pi about any axis orthogonal to u_from
        axis = np.cross(u_from, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-8:
            axis = np.cross(u_from, [0.0, 1.0, 0.0])
        axis /= np.linalg.norm(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    K = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + K + K @ K * ((1 - c) / s**2)


def rotate_max_to_equator(phi: BandLimitedFunction, rule: QuadratureRule) -> GridFunction:
    """Rotate ``phi`` so its grid maximum sits on the equator ``|z| = 1``.

    Returns the rotated function sampled on ``rule``.
    """
    g = evaluate(phi, rule)
    u_max = rule.unit_vectors[int(np.argmax(g.values))]
    R = _rotation_to(u_max, np.array([1.0, 0.0, 0.0]))
    # phi_rot(x) = phi(R^T x)
    pulled = rule.unit_vectors @ R
    return GridFunction(rule, evaluate_at(phi, pulled))


@dataclass(frozen=True, eq=False)
class HemisphereProfile:
    """Exact weighted distribution of one hemisphere, in rearranged order.

    ``values[k]`` occupies the mass interval ``[edges[k], edges[k+1]]`` of the
    hemisphere, counted from the pole outwards to the equator.
    """

    values: np.ndarray
    weights: np.ndarray
    pole_sign: int  # -1 for the |z| <= 1 side (south), +1 for |z| >= 1

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.weights)])

    def heights(self) -> np.ndarray:
        """Height ``t`` of the mass midpoint of each piece (cap mass = (1 -/+ t)/2)."""
        e = self.edges
        mid = 0.5 * (e[:-1] + e[1:])
        return self.pole_sign * (1.0 - 2.0 * mid)


@dataclass(frozen=True, eq=False)
class Rearrangement:
    grid: GridFunction
    lower: HemisphereProfile
    upper: HemisphereProfile


def _hemisphere_masks(rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    lower_ring = rule.t <= 0.0
    return lower_ring, ~lower_ring


def _ring_average_from_profile(values, weights, ring_masses) -> np.ndarray:
    """Average of a monotone step function over consecutive mass intervals."""
    edges = np.concatenate([[0.0], np.cumsum(weights)])
    cum = np.concatenate([[0.0], np.cumsum(values * weights)])
    targets = np.concatenate([[0.0], np.cumsum(ring_masses)])
    targets[-1] = edges[-1]

    def cumulative(x):
        k = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(values) - 1)
        return cum[k] + values[k] * (x - edges[k])

    F = cumulative(targets)
    return np.diff(F) / np.asarray(ring_masses)


def rearrange_rotsym(g: GridFunction) -> Rearrangement:
    """Two-sided rotationally symmetric rearrangement on a product grid.

    On ``|z| <= 1`` (``t <= 0``) the values are rearranged to increase away
    from ``z = 0``; on ``|z| >= 1`` to decrease towards ``z = inf``.  The
    exact rearranged distribution is kept in the two profiles; the grid
    function averages it over each ring's mass, so it is ring-constant and
    has the same integral as ``g``.
    """
    rule = g.rule
    lower_ring, upper_ring = _hemisphere_masks(rule)
    V = rule.ring_view(g.values)
    W = np.broadcast_to((rule.ring_weights / rule.n_azimuth)[:, None], V.shape)
    out = np.empty_like(V)
    profiles = {}
    for rings, sign in ((lower_ring, -1), (upper_ring, +1)):
        vals = V[rings].ravel()
        wts = W[rings].ravel()
        # pole first: south pole is the lowest t, north pole the highest
        order = np.argsort(vals, kind="stable")
        pv, pw = vals[order], wts[order]
        profiles[sign] = HemisphereProfile(pv, pw, sign)
        ring_idx = np.flatnonzero(rings)
        ring_order = ring_idx if sign < 0 else ring_idx[::-1]
        masses = rule.ring_weights[ring_order]
        avg = _ring_average_from_profile(pv, pw, masses)
        out[ring_order] = avg[:, None]
    return Rearrangement(GridFunction(rule, out.ravel()), profiles[-1], profiles[+1])


def profile_energy(r: Rearrangement) -> float:
    """Dirichlet energy of the ring-averaged rearrangement.

    The ring values are joined piecewise linearly in ``t`` and held constant
    out to the poles; for zonal ``f(t)`` the energy is
    ``(1/2) int (1 - t^2) f'(t)^2 dt``, integrated exactly per segment.
    """
    rule = r.grid.rule
    t = rule.t
    v = rule.ring_view(r.grid.values)[:, 0]
    slope = np.diff(v) / np.diff(t)
    a, b = t[:-1], t[1:]
    w = (b - a) - (b**3 - a**3) / 3.0
    return float(0.5 * np.sum(w * slope**2))
