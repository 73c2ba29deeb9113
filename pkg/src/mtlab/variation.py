"""First and second variations of A_n, the kernel identity, and the J_n claim."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate as spi

from .funcspace import (
    BandLimitedFunction,
    GridFunction,
    analyze,
    degree_of_index,
    dirichlet_energy,
    evaluate,
    grad_norm_sq,
    harmonic_basis,
    laplacian,
)
from .gram import (
    adaptive_degree,
    default_degree,
    gram_matrix,
    moment_matrix,
    section_log_magnitudes,
)
from .sphere import QuadratureRule, build_quadrature

__all__ = [
    "HessianForm",
    "JnTable",
    "JnClaimReport",
    "partition_of_unity",
    "bergman_density",
    "euler_residual",
    "gradient_A",
    "second_variation",
    "hessian_form",
    "hessian_spectrum",
    "hessian_eigenvalue_at_zero",
    "kernel_identity_check",
    "g_function",
    "g_integral_identity",
    "jn_direct",
    "jn_recursive",
    "jn_claim_check",
]


def partition_of_unity(n: int, t) -> np.ndarray:
    """``sum_i |alpha_i(z)|^2 / (1+|z|^2)^n`` at heights ``t``; identically ``n+1``."""
    return np.exp(2.0 * section_log_magnitudes(n, t)).sum(axis=-1)


def _section_values(n: int, rule: QuadratureRule) -> np.ndarray:
    logr = section_log_magnitudes(n, rule.node_t)
    i = np.arange(n + 1)
    return np.exp(logr) * np.exp(1j * np.outer(rule.node_theta, i))


def _rule(n: int, phi: BandLimitedFunction, L_max: int, degree: int | None) -> QuadratureRule:
    """Explicit ``degree``, or the larger of the ``phi``-adapted and ``L_max`` defaults."""
    if degree is None:
        degree = max(adaptive_degree(n, phi), default_degree(n, L_max))
    return build_quadrature(degree)


def bergman_density(n: int, phi: GridFunction) -> np.ndarray:
    """``exp(phi) v^H M_phi^{-1} v`` per node, the first-variation density of B_n.

    It integrates to ``n + 1`` against ``mu``.
    """
    G = gram_matrix(n, phi)
    L = np.linalg.cholesky(G.entries)
    V = _section_values(n, phi.rule)  # (K, n+1)
    Y = np.linalg.solve(L, V.T)  # L^{-1} v per node
    return np.exp(phi.values - G.log_scale) * np.sum(np.abs(Y) ** 2, axis=0)


def euler_residual(n: int, phi: BandLimitedFunction, degree: int | None = None) -> GridFunction:
    """``tr(M^{-1}[alpha_i conj(alpha_j) e^phi/(1+|z|^2)^n]) + Lap phi - (n+1)`` on the grid.

    ``int R f mu`` is the derivative of ``A_n`` at ``phi`` in direction ``f``.
    """
    rule = _rule(n, phi, phi.L_max, degree)
    g = evaluate(phi, rule)
    rho = bergman_density(n, g)
    lap = evaluate(laplacian(phi), rule).values
    return GridFunction(rule, rho + lap - (n + 1))


def gradient_A(
    n: int, phi: BandLimitedFunction, L_max: int | None = None, degree: int | None = None
) -> BandLimitedFunction:
    """Coefficient gradient of ``A_n`` restricted to degrees ``<= L_max``."""
    L_max = phi.L_max if L_max is None else L_max
    if degree is None:
        degree = _rule(n, phi, max(L_max, phi.L_max), None).degree
    R = euler_residual(n, phi, degree)
    return analyze(R, L_max)


def second_variation(
    n: int,
    phi: BandLimitedFunction,
    f: BandLimitedFunction,
    degree: int | None = None,
    energy_weight: str = "plain",
) -> float:
    """``d^2/dt^2 A_n(phi + t f)`` at ``t = 0``.

    ``tr[M^{-1} M''(f)] - tr[M^{-1} M'(f) M^{-1} M'(f)] - D(f)``.  With
    ``energy_weight="plain"`` (the default, agreeing with finite differences)
    ``D(f) = E(f)``; ``"weighted"`` uses ``int |grad f|^2 exp(phi) mu``
    instead, which coincides with it only at ``phi = 0``.
    """
    L = max(phi.L_max, f.L_max)
    rule = _rule(n, phi, 2 * L, degree)
    g = evaluate(phi, rule)
    fv = evaluate(f, rule).values
    G = gram_matrix(n, g)
    w = np.exp(g.values - G.log_scale)
    M = G.entries
    M1 = np.linalg.solve(M, moment_matrix(n, rule, fv * w))
    M2 = np.linalg.solve(M, moment_matrix(n, rule, fv * fv * w))
    val = float(np.trace(M2).real - np.trace(M1 @ M1).real)
    if energy_weight == "plain":
        return val - dirichlet_energy(f)
    if energy_weight == "weighted":
        gsq = grad_norm_sq(f, rule).values
        return val - float(rule.weights @ (gsq * np.exp(g.values)))
    raise ValueError(f"unknown energy_weight {energy_weight!r}")


@dataclass(frozen=True, eq=False)
class HessianForm:
    n: int
    L_max: int
    Q: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    def zero_mean_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.Q[1:, 1:])


def hessian_form(
    n: int,
    L_max: int,
    phi: BandLimitedFunction | None = None,
    degree: int | None = None,
) -> HessianForm:
    """Second-variation form of ``A_n`` on harmonics of degree ``<= L_max``.

    Assembled as the bilinear form
    ``Q(f, g) = int f g rho mu - tr(N_f N_g) - <f, g>_E`` with
    ``N_f = M^{-1} M'(f)``; its diagonal reproduces :func:`second_variation`
    and its off-diagonal entries equal the polarization of it.
    """
    if phi is None:
        phi = BandLimitedFunction.zeros(0)
    rule = _rule(n, phi, 2 * max(L_max, phi.L_max), degree)
    g = evaluate(phi, rule)
    G = gram_matrix(n, g)
    w = np.exp(g.values - G.log_scale)
    rho = bergman_density(n, g)
    Y = harmonic_basis(L_max, rule.node_t, rule.node_theta)  # (K, nb)
    term1 = Y.T @ (Y * (rule.weights * rho)[:, None])
    Minv = np.linalg.inv(G.entries)
    N = np.stack([Minv @ moment_matrix(n, rule, Y[:, a] * w) for a in range(Y.shape[1])])
    term2 = np.einsum("aij,bji->ab", N, N).real
    l = degree_of_index(L_max)
    Q = term1 - term2 - np.diag(l * (l + 1.0))
    Q = 0.5 * (Q + Q.T)
    evals, evecs = np.linalg.eigh(Q)
    return HessianForm(n, L_max, Q, evals, evecs)


def hessian_spectrum(n: int, L_max: int, degree: int | None = None) -> HessianForm:
    """Hessian of ``A_n`` at ``phi = 0`` with its sorted spectrum."""
    return hessian_form(n, L_max, None, degree)


def hessian_eigenvalue_at_zero(n: int, l: int) -> float:
    """Closed-form Hessian eigenvalue on degree-``l`` harmonics at ``phi = 0``.

    By rotation invariance the form is scalar on each degree.  Funk-Hecke
    with the kernel ``cos^{2n}(d/2)`` gives the multiplier
    ``lam_l = n!^2 / ((n-l)! (n+l+1)!)`` (zero for ``l > n``), and the value
    is ``(n+1)(1 - (n+1) lam_l) - l(l+1)``.
    """
    if l > n:
        lam = 0.0
    else:
        lam = math.exp(2 * math.lgamma(n + 1) - math.lgamma(n - l + 1) - math.lgamma(n + l + 2))
    return (n + 1) * (1.0 - (n + 1) * lam) - l * (l + 1)


def kernel_identity_check(
    n: int, f: BandLimitedFunction, degree: int | None = None
) -> tuple[float, float]:
    """Both sides of the kernel rewriting of the second-variation bound at 0.

    ``lhs = sum_i int f^2 alpha_ii mu - sum_ij |int f alpha_ij mu|^2`` from
    moment matrices; ``rhs = (n+1)^2/2 iint (f(x)-f(y))^2 cos^{2n}(d/2)``
    by a tensor-product double sum over node pairs.
    """
    if degree is None:
        degree = max(2 * f.L_max + n + 2, 2 * n)
    rule = build_quadrature(degree)
    fv = evaluate(f, rule).values
    M2 = moment_matrix(n, rule, fv * fv)
    M1 = moment_matrix(n, rule, fv)
    lhs = float(np.trace(M2).real - np.sum(np.abs(M1) ** 2))
    U = rule.unit_vectors
    w = rule.weights
    cos2 = np.clip(0.5 * (1.0 + U @ U.T), 0.0, 1.0)
    diff2 = (fv[:, None] - fv[None, :]) ** 2
    rhs = 0.5 * (n + 1) ** 2 * float(w @ (diff2 * cos2**n) @ w)
    return lhs, rhs


# --------------------------------------------------------------------------
# G(l) and J_n


def _g_integrand(n: int):
    def f(theta):
        return math.cos(theta / 2.0) ** (2 * n) * theta * math.sin(theta)

    return f


def g_function(n: int, l: float) -> float:
    """``G(l) = int_l^pi cos^{2n}(theta/2) theta sin(theta) dtheta``."""
    if not 0.0 <= l <= math.pi:
        raise ValueError("l must lie in [0, pi]")
    if l == math.pi:
        return 0.0
    val, _ = spi.quad(_g_integrand(n), l, math.pi, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def g_integral_identity(n: int) -> float:
    """``(n+1)^2/8 int_0^pi G(l) dl`` by nested adaptive quadrature; equals ``J_n``."""
    val, _ = spi.quad(lambda l: g_function(n, l), 0.0, math.pi, epsabs=1e-14, epsrel=1e-12, limit=200)
    return (n + 1) ** 2 / 8.0 * val


_GL_T, _GL_W = np.polynomial.legendre.leggauss(400)


def jn_direct(n: int) -> float:
    """``J_n = 2(n+1) int_0^{pi/2} t cos^{2n+2}(t) dt`` by Gauss-Legendre.

    The integrand is negligible beyond ``cos^{2n+2} t < 1e-40``, so the
    interval is cut there before applying a fixed 400-point rule.
    """
    p = 2 * n + 2
    b = min(math.pi / 2.0, math.acos(math.exp(-92.0 / p)))
    t = 0.5 * b * (_GL_T + 1.0)
    vals = t * np.exp(p * np.log(np.cos(t)))
    return float(2 * (n + 1) * 0.5 * b * (_GL_W @ vals))


@dataclass(frozen=True, eq=False)
class JnTable:
    values: np.ndarray = field(repr=False)
    method: str

    @property
    def N(self) -> int:
        return len(self.values) - 1


def jn_recursive(N: int, dps: int = 34) -> JnTable:
    """``J_0..J_N`` from ``J_n = -1/(2n+2) + (2n+1)/(2n) J_{n-1}``.

    Iterated in ``dps``-digit arithmetic from the closed form
    ``J_0 = pi^2/8 - 1/2``.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    out = np.empty(N + 1)
    with mpmath.workdps(dps):
        J = mpmath.pi**2 / 8 - mpmath.mpf(1) / 2
        out[0] = float(J)
        one = mpmath.mpf(1)
        for n in range(1, N + 1):
            J = -one / (2 * n + 2) + mpmath.mpf(2 * n + 1) / (2 * n) * J
            out[n] = float(J)
    return JnTable(out, "recursive")


@dataclass(frozen=True)
class JnClaimReport:
    N: int
    all_below_one: bool
    max_value: float
    min_gap: float  # min over n of 1 - J_n
    monotone_from: int | None  # first index after which J_n increases strictly
    star_from: int | None  # first n >= 1 with J_{n-1} >= (3n+2)/(3n+3)
    decay_exponent: float  # fit 1 - J_n ~ C (n+1)^p over the upper decade
    decay_constant: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def jn_claim_check(N: int) -> JnClaimReport:
    """Check ``J_n < 1`` for ``n <= N`` and summarize the approach to 1."""
    if N > 10**6:
        raise ValueError("N is capped at 1e6")
    table = jn_recursive(N)
    J = table.values
    gap = 1.0 - J
    inc = np.diff(J) > 0
    if inc.size == 0:
        mono = None
    elif inc.all():
        mono = 0
    elif inc[-1]:
        mono = int(np.flatnonzero(~inc)[-1] + 1)
    else:
        mono = None
    n = np.arange(1, N + 1)
    star = J[:-1] >= (3 * n + 2) / (3 * n + 3)
    star_from = int(n[np.argmax(star)]) if star.any() else None
    lo = max(1, N // 10)
    m = np.arange(lo, N + 1)
    if m.size >= 2:
        p, logc = np.polyfit(np.log(m + 1.0), np.log(gap[lo:]), 1)
    else:
        p, logc = float("nan"), float("nan")
    return JnClaimReport(
        N=N,
        all_below_one=bool(np.all(J < 1.0)),
        max_value=float(J.max()),
        min_gap=float(gap.min()),
        monotone_from=mono,
        star_from=star_from,
        decay_exponent=float(p),
        decay_constant=float(math.exp(logc)),
    )
