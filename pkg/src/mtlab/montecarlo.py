"""The n+1 point process with density K_n on S^2 and Monte-Carlo estimates of B_n.

Under ``Prod mu``, ``K_n = c_n Prod_{i<j} sin^2(d_ij / 2)`` with
``c_n = (n+1)^(n+1) Prod_i C(n,i) / (n+1)!``, and
``exp B_n(phi) = E[exp(sum_i phi(z_i))]``.

Exact samples come from the spherical ensemble: the eigenvalues of
``B^{-1} A`` for independent ``(n+1) x (n+1)`` complex Ginibre matrices,
mapped to the sphere by the inverse stereographic chart.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .funcspace import BandLimitedFunction, evaluate_at
from .sphere import (
    QuadratureRule,
    SpherePoint,
    from_unit_vector,
    stereographic_to_unit_vectors,
)

__all__ = [
    "PointConfiguration",
    "McEstimate",
    "kn_log_prefactor",
    "kn_log_density",
    "kn_log_density_array",
    "normalization_check",
    "tensor_expectation",
    "sample",
    "sample_batch",
    "metropolis_sample",
    "mc_estimate_B",
    "write_samples_csv",
]

BLOCK = 4096
MAX_RETRIES = 8


@dataclass(frozen=True, eq=False)
class PointConfiguration:
    n: int
    points: tuple[SpherePoint, ...] = field(repr=False)

    def __post_init__(self):
        if len(self.points) != self.n + 1:
            raise ValueError(f"need {self.n + 1} points, got {len(self.points)}")

    @property
    def unit_vectors(self) -> np.ndarray:
        return np.array([p.u for p in self.points])

    @classmethod
    def from_unit_vectors(cls, u) -> PointConfiguration:
        u = np.asarray(u, dtype=float)
        return cls(len(u) - 1, tuple(from_unit_vector(x) for x in u))


def kn_log_prefactor(n: int) -> float:
    i = np.arange(n + 1)
    log_binoms = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
    return float((n + 1) * math.log(n + 1) + log_binoms.sum() - gammaln(n + 2))


def kn_log_density_array(u: np.ndarray) -> np.ndarray:
    """``log K_n`` for configurations stacked as ``(..., n+1, 3)`` unit vectors."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-2] - 1
    out = np.full(u.shape[:-2], kn_log_prefactor(n))
    for i, j in itertools.combinations(range(n + 1), 2):
        # sin(d/2) is half the chordal distance
        chord = np.linalg.norm(u[..., i, :] - u[..., j, :], axis=-1)
        with np.errstate(divide="ignore"):
            out = out + 2.0 * np.log(0.5 * chord)
    return out


def kn_log_density(config: PointConfiguration) -> float:
    """``log K_n`` of a configuration; ``-inf`` when two points coincide."""
    return float(kn_log_density_array(config.unit_vectors))


def _tensor_sum(n: int, rule: QuadratureRule, node_factor: np.ndarray | None) -> float:
    """``sum over node tuples of prod w_k * node_factor_k * K_n`` (chunked)."""
    U = rule.unit_vectors
    logw = np.log(rule.weights)
    if node_factor is not None:
        logw = logw + node_factor
    K = rule.size
    # pairwise log sin^2(d/2) table, -inf on coincident nodes
    cos = np.clip(U @ U.T, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        pair = np.log(0.5 * (1.0 - cos))
    np.fill_diagonal(pair, -np.inf)
    if n == 0:
        return float(np.exp(logw).sum())
    pre = kn_log_prefactor(n)
    total = 0.0
    # iterate over the first n-1 coordinates, vectorize the last two
    for head in itertools.product(range(K), repeat=n - 1):
        acc = pre + sum(logw[h] for h in head)
        pairs_head = sum(pair[a, b] for a, b in itertools.combinations(head, 2)) if n > 2 else 0.0
        acc = acc + pairs_head
        if np.isneginf(acc):
            continue
        lin = np.zeros(K)
        for h in head:
            lin = lin + pair[h]
        grid = (acc + (logw + lin)[:, None] + (logw + lin)[None, :] + pair)
        total += float(np.exp(grid).sum())
    return total


def normalization_check(n: int, rule: QuadratureRule) -> float:
    """``int K_n Prod mu`` by a tensor product of ``rule``; ``n <= 3``."""
    if n > 3:
        raise ValueError("tensor-product normalization is limited to n <= 3")
    return _tensor_sum(n, rule, None)


def tensor_expectation(n: int, rule: QuadratureRule, phi_values: np.ndarray) -> float:
    """``int exp(sum_i phi(z_i)) K_n Prod mu`` by tensor quadrature; ``n <= 3``."""
    if n > 3:
        raise ValueError("tensor-product expectation is limited to n <= 3")
    return _tensor_sum(n, rule, np.asarray(phi_values, dtype=float))


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(block),)))


def _ginibre_points(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    shape = (count, n + 1, n + 1)
    A = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    B = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    for attempt in range(MAX_RETRIES):
        try:
            z = np.linalg.eigvals(np.linalg.solve(B, A))
            break
        except np.linalg.LinAlgError:
            B = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    else:
        raise np.linalg.LinAlgError("spherical-ensemble eigensolve failed repeatedly")
    # LAPACK returns eigenvalues in a structured order; shuffle so labels are exchangeable
    z = np.take_along_axis(z, np.argsort(rng.random(z.shape), axis=1), axis=1)
    return stereographic_to_unit_vectors(z)


def sample_batch(n: int, count: int, seed: int, start_block: int = 0) -> np.ndarray:
    """``count`` exact samples as an array ``(count, n+1, 3)`` of unit vectors.

    Samples are drawn in blocks of ``BLOCK`` from counter-indexed
    substreams of ``seed``, so a block's content depends only on
    ``(seed, block index)``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = np.empty((count, n + 1, 3))
    done, block = 0, start_block
    while done < count:
        rng = _block_rng(seed, block)
        pts = _ginibre_points(n, BLOCK, rng)
        take = min(BLOCK, count - done)
        out[done:done + take] = pts[:take]
        done += take
        block += 1
    return out


def sample(n: int, seed: int) -> PointConfiguration:
    """One configuration with law ``K_n``: the first draw of the ``seed`` stream."""
    return PointConfiguration.from_unit_vectors(sample_batch(n, 1, seed)[0])


def metropolis_sample(
    n: int, count: int, seed: int, step: float = 0.5, burn_in: int = 2000, thin: int = 20
) -> np.ndarray:
    """Random-walk Metropolis chain targeting ``K_n``; debugging fallback only.

    One point is moved per proposal by a Gaussian kick in the tangent plane
    followed by renormalization (a symmetric proposal on the sphere).
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n + 1, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    logp = float(kn_log_density_array(x))
    out = np.empty((count, n + 1, 3))
    kept, it = 0, 0
    while kept < count:
        i = rng.integers(n + 1)
        y = x.copy()
        y[i] = y[i] + step * rng.standard_normal(3)
        y[i] /= np.linalg.norm(y[i])
        logq = float(kn_log_density_array(y))
        if math.log(rng.random()) < logq - logp:
            x, logp = y, logq
        it += 1
        if it > burn_in and (it - burn_in) % thin == 0:
            out[kept] = x
            kept += 1
    return out


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    samples: int
    seed: int

    def __iter__(self):
        return iter((self.estimate, self.stderr))


def mc_estimate_B(n: int, phi: BandLimitedFunction, samples: int, seed: int) -> McEstimate:
    """``log mean exp(sum_i phi(z_i))`` over exact samples, with a delta-method error.

    The mean of ``exp`` is accumulated blockwise against a running maximum,
    so large ``phi`` cannot overflow.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    shift = -np.inf
    s1 = s2 = 0.0  # sums of exp(x - shift) and its square
    done, block = 0, 0
    while done < samples:
        take = min(BLOCK, samples - done)
        u = sample_batch(n, take, seed, start_block=block)
        x = evaluate_at(phi, u).sum(axis=1)
        m = float(x.max())
        if m > shift:
            scale = math.exp(shift - m) if np.isfinite(shift) else 0.0
            s1 *= scale
            s2 *= scale * scale
            shift = m
        e = np.exp(x - shift)
        s1 += float(e.sum())
        s2 += float((e * e).sum())
        done += take
        block += 1
    N = samples
    mean_e = s1 / N
    var_e = max(s2 / N - mean_e**2, 0.0) * N / (N - 1)
    est = math.log(mean_e) + shift
    se = math.sqrt(var_e / N) / mean_e
    if se < 1e-13 * max(1.0, abs(est)):
        se = 0.0
    return McEstimate(est, se, samples, seed)


def write_samples_csv(path, configs: np.ndarray) -> None:
    """Dump configurations as CSV rows ``config,point,x,y,z``."""
    configs = np.asarray(configs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "point", "x", "y", "z"])
        for c, pts in enumerate(configs):
            for p, (x, y, z) in enumerate(pts):
                w.writerow([c, p, repr(float(x)), repr(float(y)), repr(float(z))])
