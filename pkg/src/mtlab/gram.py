"""Gram matrices of holomorphic sections of O(n) and the functionals B_n, A_n.

The sections ``alpha_i = sqrt((n+1) C(n,i)) z^i`` are orthonormal for the
unweighted metric.  On a node with height ``t`` and azimuth ``theta`` put
``s = (1 + t)/2``; then

    alpha_i conj(alpha_j) / (1 + |z|^2)^n = r_i r_j exp(1j (i - j) theta),
    log r_i = basis_log_weight(n, i) + (i/2) log s + ((n - i)/2) log(1 - s),

so every magnitude is assembled in log space and only the bounded products
``r_i r_j <= n + 1`` are exponentiated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.special import gammaln, logsumexp

from .funcspace import (
    BandLimitedFunction,
    GridFunction,
    dirichlet_energy,
    evaluate,
    mean,
)
from .sphere import QuadratureRule, build_quadrature

__all__ = [
    "CholeskyFailure",
    "GramMatrix",
    "FunctionalReport",
    "basis_log_weight",
    "section_log_magnitudes",
    "default_degree",
    "adaptive_degree",
    "moment_matrix",
    "gram_matrix",
    "gram_matrix_direct",
    "zonal_gram_diagonal",
    "cholesky_logdet",
    "log_det_B",
    "functional_A",
    "permutation_products",
    "max_permutation_product",
    "determinant_domination_check",
]


class CholeskyFailure(np.linalg.LinAlgError):
    """Gram matrix not numerically positive definite (quadrature too coarse?)."""


@dataclass(frozen=True, eq=False)
class GramMatrix:
    n: int
    entries: np.ndarray = field(repr=False)
    # true matrix is exp(log_scale) * entries; keeps huge phi finite
    log_scale: float = 0.0

    def matrix(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.entries

    def logdet(self) -> float:
        return cholesky_logdet(self.entries) + (self.n + 1) * self.log_scale


@dataclass(frozen=True)
class FunctionalReport:
    n: int
    energy: float
    mean: float
    B: float
    A: float
    degree: int

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "energy": self.energy,
            "mean": self.mean,
            "B": self.B,
            "A": self.A,
            "quadrature_degree": self.degree,
        }


def basis_log_weight(n: int, i: int) -> float:
    """``log sqrt((n+1) C(n, i))`` via log-gamma."""
    if not 0 <= i <= n:
        raise ValueError(f"section index {i} outside 0..{n}")
    return 0.5 * (math.log(n + 1) + gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1))


def _log_weights(n: int) -> np.ndarray:
    i = np.arange(n + 1)
    return 0.5 * (np.log(n + 1) + gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1))


def section_log_magnitudes(n: int, t) -> np.ndarray:
    """``log r_i(t)`` for every node height, shape ``t.shape + (n+1,)``."""
    t = np.asarray(t, dtype=float)
    i = np.arange(n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_s = np.log1p(t)[..., None] - math.log(2.0)
        log_1ms = np.log1p(-t)[..., None] - math.log(2.0)
        # 0 * (-inf) at a pole node means an empty power; it contributes 0
        a = np.where(i == 0, 0.0, 0.5 * i * log_s)
        b = np.where(i == n, 0.0, 0.5 * (n - i) * log_1ms)
    return _log_weights(n) + a + b


def default_degree(n: int, L_max: int) -> int:
    return 2 * n + 2 * L_max + 16


def adaptive_degree(n: int, phi: BandLimitedFunction) -> int:
    """:func:`default_degree` widened by the oscillation of ``phi``.

    ``exp(phi)`` carries roughly ``osc(phi)`` extra units of bandwidth.
    """
    probe = build_quadrature(max(2 * phi.L_max, 8))
    v = evaluate(phi, probe).values
    return default_degree(n, phi.L_max) + 2 * int(math.ceil(v.max() - v.min()))


def _check_rule(n: int, rule: QuadratureRule) -> None:
    if rule.degree < 2 * n:
        raise ValueError(f"rule degree {rule.degree} too coarse for n = {n} (need >= {2 * n})")
    if rule.n_azimuth <= 2 * n:
        raise ValueError(f"{rule.n_azimuth} azimuths cannot resolve frequencies up to {n}")


def moment_matrix(n: int, rule: QuadratureRule, weight, normalized: bool = True) -> np.ndarray:
    """``[int alpha_i conj(alpha_j) w / (1+|z|^2)^n mu]`` for node weights ``w``.

    The azimuthal sums are done per ring with an FFT, so each ring contributes
    ``r_i r_j F(i - j)`` where ``F`` holds the ring's Fourier moments of
    ``w``.  With ``normalized=False`` the section constants are dropped,
    giving ``[int z^i conj(z)^j w / (1+|z|^2)^n mu]``.
    """
    _check_rule(n, rule)
    W = rule.ring_view(np.asarray(weight))
    F = np.fft.ifft(W, axis=1)  # F[r, m] = mean_k w_rk exp(+1j m theta_k)
    logr = section_log_magnitudes(n, rule.t)
    if not normalized:
        logr = logr - _log_weights(n)
    i = np.arange(n + 1)
    D = (i[:, None] - i[None, :]) % rule.n_azimuth
    out = np.zeros((n + 1, n + 1), dtype=complex)
    chunk = max(1, 4_000_000 // ((n + 1) ** 2))
    for start in range(0, rule.n_rings, chunk):
        sl = slice(start, start + chunk)
        lr = logr[sl]
        mag = np.exp(lr[:, :, None] + lr[:, None, :])
        out += np.einsum("r,rij,rij->ij", rule.ring_weights[sl], mag, F[sl][:, D])
    out = 0.5 * (out + out.conj().T) if np.isrealobj(weight) else out
    return out


def gram_matrix(n: int, phi: GridFunction) -> GramMatrix:
    """Gram matrix ``<alpha_i, alpha_j>_phi`` on the grid of ``phi``."""
    v = phi.values
    if not np.all(np.isfinite(v)):
        raise ValueError("phi has non-finite grid values")
    shift = float(v.max())
    if abs(shift) < 30.0:
        shift = 0.0
    M = moment_matrix(n, phi.rule, np.exp(v - shift))
    return GramMatrix(n, M, shift)


def gram_matrix_direct(n: int, phi: GridFunction) -> np.ndarray:
    """Node-by-node assembly of the Gram matrix; slow reference path."""
    rule = phi.rule
    logr = section_log_magnitudes(n, rule.node_t)  # (K, n+1)
    i = np.arange(n + 1)
    phase = np.exp(1j * np.outer(rule.node_theta, i))
    out = np.zeros((n + 1, n + 1), dtype=complex)
    for k in range(rule.size):
        a = np.exp(logr[k] + 0.5 * phi.values[k]) * phase[k]
        out += rule.weights[k] * np.outer(a, a.conj())
    return out


def zonal_gram_diagonal(n: int, phi_of_t, n_nodes: int | None = None) -> np.ndarray:
    """Diagonal Gram entries for a zonal ``phi`` by 1-D Gauss-Legendre in ``t``.

    ``M_ii = (n+1) C(n,i) (1/2) int s^i (1-s)^(n-i) exp(phi(t)) dt``, ``s = (1+t)/2``.
    Returns ``log M_ii``.
    """
    if n_nodes is None:
        n_nodes = n + 200
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    logr = section_log_magnitudes(n, t)  # (N, n+1)
    logv = 2.0 * logr + np.asarray(phi_of_t(t), dtype=float)[:, None]
    return logsumexp(logv, b=0.5 * w[:, None], axis=0)


def cholesky_logdet(M: np.ndarray) -> float:
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure(
            "Gram matrix is not positive definite; refine the quadrature"
        ) from exc
    return float(2.0 * np.sum(np.log(np.diag(L).real)))


def _rule_for(n: int, phi: BandLimitedFunction, degree: int | None) -> QuadratureRule:
    if degree is None:
        degree = adaptive_degree(n, phi)
    return build_quadrature(degree)


def log_det_B(n: int, phi: BandLimitedFunction, degree: int | None = None) -> float:
    """``B_n(phi) = log det <alpha_i, alpha_j>_phi``."""
    rule = _rule_for(n, phi, degree)
    return gram_matrix(n, evaluate(phi, rule)).logdet()


def functional_A(n: int, phi: BandLimitedFunction, degree: int | None = None) -> FunctionalReport:
    """``A_n = -E/2 - (n+1) mean + B_n``."""
    rule = _rule_for(n, phi, degree)
    B = gram_matrix(n, evaluate(phi, rule)).logdet()
    E = dirichlet_energy(phi)
    m = mean(phi)
    return FunctionalReport(n, E, m, B, -0.5 * E - (n + 1) * m + B, rule.degree)


# --------------------------------------------------------------------------
# permutation-product lemma


def _log_moment(p, log_r, log_w):
    return logsumexp(np.multiply.outer(p, log_r) + log_w, axis=-1)


def permutation_products(a, radii, weights, sigma) -> tuple[float, float]:
    """``log S_sigma`` and ``log S_id`` for a discrete measure on radii.

    ``S_sigma = prod_i int |z|^(a_i + a_sigma(i)) dlambda`` with
    ``lambda = sum_k weights_k delta_{radii_k}``.
    """
    a = np.asarray(a, dtype=float)
    radii = np.asarray(radii, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if radii.size == 0 or weights.sum() <= 0:
        raise ValueError("measure must be nonempty with positive mass")
    if np.any(radii <= 0) or np.any(weights <= 0):
        raise ValueError("radii and weights must be positive")
    if np.any(np.diff(a) < 0) or np.any(a < 0):
        raise ValueError("exponents must be nonnegative and ascending")
    sigma = np.asarray(sigma, dtype=int)
    if sorted(sigma.tolist()) != list(range(a.size)):
        raise ValueError("sigma is not a permutation of 0..n")
    log_r, log_w = np.log(radii), np.log(weights)
    s_sigma = float(np.sum(_log_moment(a + a[sigma], log_r, log_w)))
    s_id = float(np.sum(_log_moment(2.0 * a, log_r, log_w)))
    return s_sigma, s_id


def max_permutation_product(a, radii, weights) -> tuple[tuple[int, ...], float, float]:
    """Exhaustive maximum of ``log S_sigma``; returns ``(argmax, max, log S_id)``."""
    a = np.asarray(a, dtype=float)
    log_r, log_w = np.log(np.asarray(radii, float)), np.log(np.asarray(weights, float))
    n1 = a.size
    table = _log_moment(a[:, None] + a[None, :], log_r, log_w)  # (n1, n1)
    best, best_val = None, -np.inf
    idx = np.arange(n1)
    for sigma in permutations(range(n1)):
        val = float(table[idx, list(sigma)].sum())
        if val > best_val:
            best, best_val = sigma, val
    return best, best_val, float(table[idx, idx].sum())


def determinant_domination_check(n: int, phi: GridFunction) -> tuple[float, float]:
    """``|det [int z^i conj(z)^j dlambda]|`` against ``(n+1)! S_id``, as logs.

    ``dlambda = exp(phi) (1+|z|^2)^(-n) mu``.  The check passes when the first
    value does not exceed the second.
    """
    if n > 8:
        raise ValueError("determinant domination check is limited to n <= 8")
    rule = phi.rule
    shift = float(phi.values.max())
    M = moment_matrix(n, rule, np.exp(phi.values - shift), normalized=False)
    sign, logabs = np.linalg.slogdet(M)
    log_det = float(logabs) + (n + 1) * shift
    log_s_id = float(np.sum(np.log(np.diag(M).real))) + (n + 1) * shift
    return log_det, math.lgamma(n + 2) + log_s_id
