"""Conjecture-level experiments on A_n: ascent searches, rays, asymptotics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .funcspace import (
    BandLimitedFunction,
    degree_of_index,
    dirichlet_energy,
    evaluate,
    make_family,
    mean,
    profile_energy,
    rearrange_rotsym,
    rotate_max_to_equator,
)
from .gram import (
    adaptive_degree,
    functional_A,
    gram_matrix,
    log_det_B,
    section_log_magnitudes,
)
from .sphere import build_quadrature
from .variation import gradient_A

__all__ = [
    "AscentOptions",
    "AscentTrace",
    "ScanReport",
    "DecayReport",
    "D0Report",
    "working_degree",
    "ascend",
    "conjecture_scan",
    "zonal_scan",
    "large_energy_decay",
    "d0_asymptotic",
    "rearrangement_check",
]

VIOLATION_THRESHOLD = 1e-5


def working_degree(n: int, phi: BandLimitedFunction) -> int:
    """Quadrature degree used by the experiments (see ``gram.adaptive_degree``)."""
    return adaptive_degree(n, phi)


@dataclass
class AscentOptions:
    max_iter: int = 200
    grad_tol: float = 1e-7
    armijo: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    max_step: float = 8.0
    max_backtracks: int = 40
    precondition: bool = True  # H^1 metric: divide degree-l components by l(l+1)
    zonal: bool = False
    degree: int | None = None


@dataclass
class AscentTrace:
    n: int
    iterates: list[list[float]] = field(repr=False)
    values: list[float]
    grad_norms: list[float]
    steps: list[float]
    reason: str

    @property
    def final(self) -> BandLimitedFunction:
        c = np.asarray(self.iterates[-1])
        return BandLimitedFunction(int(round(math.sqrt(c.size))) - 1, c)

    def as_dict(self, with_iterates: bool = True) -> dict:
        d = asdict(self)
        if not with_iterates:
            d["iterates"] = [self.iterates[0], self.iterates[-1]]
        return d


def _mask(L_max: int, zonal: bool) -> np.ndarray:
    keep = np.ones((L_max + 1) ** 2, dtype=bool)
    keep[0] = False
    if zonal:
        m = np.concatenate([np.arange(-l, l + 1) for l in range(L_max + 1)])
        keep &= m == 0
    return keep


def ascend(n: int, phi0: BandLimitedFunction, opts: AscentOptions | None = None) -> AscentTrace:
    """Projected gradient ascent of ``A_n`` on zero-mean coefficients.

    Steps follow the (optionally preconditioned) gradient with Armijo
    backtracking, so accepted values never decrease.  The mean coefficient
    is reset to zero before starting and after every step.
    """
    opts = opts or AscentOptions()
    L = phi0.L_max
    keep = _mask(L, opts.zonal)
    l = degree_of_index(L)
    precond = np.where(l > 0, 1.0 / np.maximum(l * (l + 1.0), 1.0), 0.0) if opts.precondition else 1.0
    c = np.where(keep, phi0.coeffs, 0.0)
    degree = opts.degree if opts.degree is not None else working_degree(n, phi0)

    def value(coeffs):
        return functional_A(n, BandLimitedFunction(L, coeffs), degree).A

    def grad(coeffs):
        g = gradient_A(n, BandLimitedFunction(L, coeffs), L, degree).coeffs
        return np.where(keep, g, 0.0)

    A = value(c)
    g = grad(c)
    trace = AscentTrace(n, [c.tolist()], [A], [float(np.linalg.norm(g))], [], "max_iter")
    step = opts.initial_step
    for _ in range(opts.max_iter):
        gn = float(np.linalg.norm(g))
        if gn < opts.grad_tol:
            trace.reason = "converged"
            break
        p = precond * g
        slope = float(g @ p)
        s = min(step * 2.0, opts.max_step)
        for _ in range(opts.max_backtracks):
            trial = c + s * p
            A_new = value(trial)
            if A_new >= A + opts.armijo * s * slope:
                break
            s *= opts.shrink
        else:
            trace.reason = "stagnation"
            break
        c, A, step = trial, A_new, s
        g = grad(c)
        trace.iterates.append(c.tolist())
        trace.values.append(A)
        trace.grad_norms.append(float(np.linalg.norm(g)))
        trace.steps.append(s)
    else:
        if float(np.linalg.norm(g)) < opts.grad_tol:
            trace.reason = "converged"
    return trace


@dataclass
class ScanReport:
    n: int
    family: dict
    trials: list[dict]
    max_A: float
    violation: bool
    candidates: list[dict]

    def as_dict(self) -> dict:
        return asdict(self)


def _scan(n, trials, energy_range, seed, L_max, opts, zonal) -> ScanReport:
    lo, hi = energy_range
    ss = np.random.SeedSequence(int(seed))
    rows, candidates = [], []
    for k, child in enumerate(ss.spawn(trials)):
        rng = np.random.default_rng(child)
        energy = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
        trial_seed = int(rng.integers(2**31))
        desc = {"type": "random", "L_max": L_max, "energy": energy, "seed": trial_seed, "zonal": zonal}
        phi0 = make_family(desc)
        row = {"trial": k, "seed": trial_seed, "initial_energy": energy}
        if zonal:
            G = gram_matrix(n, evaluate(phi0, build_quadrature(working_degree(n, phi0))))
            M = G.entries
            row["offdiag_max"] = float(np.abs(M - np.diag(np.diag(M))).max() / np.abs(np.diag(M)).max())
        tr = ascend(n, phi0, opts)
        row.update(
            initial_A=tr.values[0],
            final_A=tr.values[-1],
            final_grad_norm=tr.grad_norms[-1],
            iterations=len(tr.steps),
            reason=tr.reason,
        )
        rows.append(row)
        if max(tr.values) > VIOLATION_THRESHOLD:
            candidates.append({"n": n, "phi": desc, "trace_final": tr.iterates[-1], "A": max(tr.values)})
    max_A = max(max(r["initial_A"], r["final_A"]) for r in rows) if rows else float("-inf")
    fam = {"type": "random", "L_max": L_max, "energy_range": [lo, hi], "zonal": zonal}
    return ScanReport(n, fam, rows, max_A, max_A > VIOLATION_THRESHOLD, candidates)


def conjecture_scan(
    n: int,
    trials: int = 50,
    energy_range: tuple[float, float] = (0.1, 10.0),
    seed: int = 0,
    L_max: int = 4,
    opts: AscentOptions | None = None,
) -> ScanReport:
    """Ascend from seeded random starts (log-uniform energies) and record max ``A_n``.

    Any value above ``1e-5`` is a conjecture-violation candidate and is kept
    with its full family descriptor.
    """
    opts = opts or AscentOptions(max_iter=60)
    return _scan(n, trials, energy_range, seed, L_max, opts, zonal=False)


def zonal_scan(
    n: int,
    trials: int = 20,
    energy_range: tuple[float, float] = (0.1, 10.0),
    seed: int = 0,
    L_max: int = 6,
    opts: AscentOptions | None = None,
) -> ScanReport:
    """As :func:`conjecture_scan` restricted to rotationally symmetric ``phi``."""
    opts = opts or AscentOptions(max_iter=60)
    opts = AscentOptions(**{**asdict(opts), "zonal": True})
    return _scan(n, trials, energy_range, seed, L_max, opts, zonal=True)


@dataclass
class DecayReport:
    n: int
    t: list[float]
    A: list[float]
    decreasing_from: float | None  # smallest listed t after which A strictly decreases

    def as_dict(self) -> dict:
        return asdict(self)


def large_energy_decay(n: int, phi: BandLimitedFunction, t_list, degree: int | None = None) -> DecayReport:
    """``A_n(t phi)`` along a ray of growing energy."""
    if dirichlet_energy(phi) <= 0.0:
        raise ValueError("large_energy_decay needs a nonconstant phi")
    t_list = [float(t) for t in t_list]
    vals = []
    for t in t_list:
        p = t * phi
        vals.append(functional_A(n, p, degree if degree is not None else working_degree(n, p)).A)
    start = None
    for k in range(len(vals)):
        if all(vals[j + 1] < vals[j] for j in range(k, len(vals) - 1)):
            start = t_list[k]
            break
    return DecayReport(n, t_list, vals, start)


@dataclass
class D0Report:
    n: list[int]
    gaps: list[float]
    D0: float
    fit: list[float]
    half_energy: float
    terms: int

    def as_dict(self) -> dict:
        return asdict(self)


def d0_asymptotic(phi: BandLimitedFunction, n_list, terms: int = 3, degree_pad: int = 0) -> D0Report:
    """Gaps ``B_n - (n+1) mean`` and their extrapolation to ``n -> inf``.

    The last ``terms`` gaps are fitted exactly by a polynomial of degree
    ``terms - 1`` in ``1/(n+1)`` (Richardson extrapolation); its constant
    term estimates ``D_0``.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing")
    m = mean(phi)
    gaps = []
    for n in n_list:
        deg = working_degree(n, phi) + degree_pad
        gaps.append(log_det_B(n, phi, deg) - (n + 1) * m)
    k = min(terms, len(n_list))
    x = 1.0 / (np.asarray(n_list[-k:], dtype=float) + 1.0)
    V = np.vander(x, k, increasing=True)
    coef = np.linalg.solve(V, np.asarray(gaps[-k:]))
    return D0Report(n_list, gaps, float(coef[0]), coef.tolist(), 0.5 * dirichlet_energy(phi), k)


def rearrangement_check(n: int, phi: BandLimitedFunction, degree: int | None = None) -> dict:
    """Numeric comparison of hemisphere moments before and after rearrangement.

    After rotating the maximum of ``phi`` to ``|z| = 1``, for each ``i``
    compare ``log int_H P_i e^phi mu`` with ``log int_H P_i e^{phi*} mu +
    2n log 2`` on both hemispheres ``H``, where
    ``P_i = |z|^{2i}/(1+|z|^2)^n``.  Also reports the energy and mean of the
    ring-averaged rearrangement.
    """
    deg = degree if degree is not None else max(working_degree(n, phi), 48)
    rule = build_quadrature(deg)
    g = rotate_max_to_equator(phi, rule)
    r = rearrange_rotsym(g)
    i = np.arange(n + 1)

    def log_P(t):
        # |z|^{2i}/(1+|z|^2)^n = s^i (1-s)^(n-i) = r_i^2 / ((n+1) C(n,i))
        return 2.0 * section_log_magnitudes(n, t) - _log_norm(n)

    out = {"n": n, "lower": [], "upper": []}
    lower_nodes = rule.node_t <= 0.0
    slack = 2 * n * math.log(2.0)
    for name, mask, prof in (("lower", lower_nodes, r.lower), ("upper", ~lower_nodes, r.upper)):
        lhs = _logsum(log_P(rule.node_t[mask]) + g.values[mask, None], rule.weights[mask])
        rhs = _logsum(log_P(prof.heights()) + prof.values[:, None], prof.weights)
        out[name] = [
            {"i": int(k), "lhs": float(a), "rhs": float(b), "holds": bool(a <= b + slack)}
            for k, a, b in zip(i, lhs, rhs)
        ]
    out["energy"] = dirichlet_energy(phi)
    out["rearranged_energy"] = profile_energy(r)
    out["mean"] = float(g.integral())
    out["rearranged_mean"] = float(r.grid.integral())
    return out


def _log_norm(n: int) -> np.ndarray:
    i = np.arange(n + 1)
    return np.log(n + 1) + gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)


def _logsum(logv: np.ndarray, w: np.ndarray) -> np.ndarray:
    return logsumexp(logv, b=w[:, None], axis=0)
