"""Batch front-end: ``mtlab <command> [flags]`` or ``mtlab <command> --config file.json``.

Every run writes a JSON report (schema ``mtlab/1``).  Exit status is 0 when
all checks pass, 2 when the computation finished but a mathematical check
failed, and 1 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__, gram, harness, montecarlo, szego, variation
from .funcspace import dirichlet_energy, evaluate, make_family, parse_family
from .sphere import build_quadrature

SCHEMA_ID = "mtlab/1"

COMMANDS = (
    "functional",
    "jn",
    "hessian",
    "kernel-identity",
    "dpp",
    "szego",
    "scan",
    "zonal-scan",
    "d0",
    "decay",
    "lemma",
)

_num_list = {"type": "array", "items": {"type": "number"}}
_int_list = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}
_phi = {"oneOf": [{"type": "string"}, {"type": "object", "required": ["type"]}]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "n": {"type": "integer", "minimum": 0},
        "n_list": _int_list,
        "phi": _phi,
        "circle": _phi,
        "degree": {"type": ["integer", "null"], "minimum": 1},
        "L_max": {"type": "integer", "minimum": 0},
        "max_n": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer"},
        "samples": {"type": "integer", "minimum": 100},
        "trials": {"type": "integer", "minimum": 1},
        "energy_range": {**_num_list, "minItems": 2, "maxItems": 2},
        "t_list": {**_num_list, "minItems": 1},
        "max_iter": {"type": "integer", "minimum": 0},
        "output": {"type": ["string", "null"]},
        "csv": {"type": ["string", "null"]},
        "dump_samples": {"type": ["string", "null"]},
        "threads": {"type": ["integer", "null"], "minimum": 1},
    },
}

DEFAULTS = {
    "functional": {"n": 4, "phi": "dipole:1", "degree": None},
    "jn": {"max_n": 1000},
    "hessian": {"n": 4, "L_max": 10, "degree": None},
    "kernel-identity": {"n": 3, "phi": "random:L_max=8,energy=1,seed=0", "degree": None},
    "dpp": {"n": 4, "phi": "dipole:1", "samples": 200000, "seed": 0},
    "szego": {"circle": "cos:1", "max_n": 64},
    "scan": {"n_list": [2, 4, 8], "trials": 50, "energy_range": [0.1, 10.0], "seed": 0, "L_max": 4, "max_iter": 60},
    "zonal-scan": {"n_list": [4], "trials": 20, "energy_range": [0.1, 10.0], "seed": 0, "L_max": 6, "max_iter": 60},
    "d0": {"phi": "dipole:1", "n_list": [32, 64, 128]},
    "decay": {"n": 4, "phi": "dipole:1", "t_list": [1, 2, 5, 10]},
    "lemma": {"n": 4, "trials": 100, "seed": 0},
}
COMMON_DEFAULTS = {"output": None, "csv": None, "threads": None}


class ConfigError(Exception):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# config handling


def load_config(path) -> dict:
    text = Path(path).read_text()
    if not text.strip():
        raise ConfigError(f"{path}: empty configuration file")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def resolve(config: dict) -> tuple[dict, list[str]]:
    """Validate a config and fill defaults; returns it with the defaulted keys."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        if exc.validator == "additionalProperties":
            extra = sorted(set(config) - set(CONFIG_SCHEMA["properties"]))
            raise ConfigError(f"unknown field(s): {', '.join(extra)}") from None
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    cmd = config["command"]
    out = dict(config)
    defaulted = []
    for key, val in {**COMMON_DEFAULTS, **DEFAULTS[cmd]}.items():
        if key not in out:
            out[key] = val
            defaulted.append(key)
    if "phi" in out:
        out["phi"] = _resolve_phi(out["phi"])
    if "circle" in out:
        out["circle"] = _resolve_circle(out["circle"])
    return out, defaulted


def _resolve_phi(phi):
    if isinstance(phi, str):
        text = phi.strip()
        if text.startswith("{"):
            phi = json.loads(text)
        else:
            try:
                phi = parse_family(text)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
    try:
        make_family(phi)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad phi descriptor {phi!r}: {exc}") from None
    return phi


def _resolve_circle(desc):
    if isinstance(desc, str):
        text = desc.strip()
        if text.startswith("{"):
            desc = json.loads(text)
        else:
            kind, _, rest = text.partition(":")
            if kind == "cos":
                desc = {"type": "cos", "a": float(rest or 1.0)}
            elif kind == "random":
                desc = {"type": "random"}
                for item in filter(None, rest.split(",")):
                    k, _, v = item.partition("=")
                    desc[k.strip()] = int(v) if k.strip() in ("K_max", "seed") else float(v)
            else:
                raise ConfigError(f"unknown circle descriptor {text!r}")
    make_circle(desc)
    return desc


def make_circle(desc) -> szego.CircleFunction:
    """``cos`` gives ``phi = 2a cos(theta)``; ``trig`` takes ``[[re, im], ...]`` for k >= 0."""
    kind = desc.get("type")
    if kind == "cos":
        return szego.CircleFunction(1, [desc.get("mean", 0.0), float(desc.get("a", 1.0))])
    if kind == "trig":
        return szego.CircleFunction(len(desc["coeffs"]) - 1, [complex(*c) for c in desc["coeffs"]])
    if kind == "random":
        return szego.random_trig_polynomial(
            int(desc.get("K_max", 4)), int(desc.get("seed", 0)), float(desc.get("scale", 0.5)), float(desc.get("mean", 0.0))
        )
    raise ConfigError(f"unknown circle descriptor type {kind!r}")


# --------------------------------------------------------------------------
# commands


def _check(name, passed, value, tolerance):
    return {"name": name, "passed": bool(passed), "value": value, "tolerance": tolerance}


def _run_functional(cfg):
    phi = make_family(cfg["phi"])
    rep = gram.functional_A(cfg["n"], phi, cfg["degree"])
    checks = [_check("conjecture A_n <= 0", rep.A <= 1e-6, rep.A, 1e-6)]
    return rep.as_dict(), checks, None


def _run_jn(cfg):
    N = cfg["max_n"]
    rep = variation.jn_claim_check(N)
    table = variation.jn_recursive(N).values
    rows = [("n", "J_n")] + [(k, repr(float(v))) for k, v in enumerate(table)]
    checks = [
        _check("J_n < 1 for all n <= max_n", rep.all_below_one, rep.max_value, 1.0),
        _check("J_0 = pi^2/8 - 1/2", abs(table[0] - (math.pi**2 / 8 - 0.5)) < 1e-12, float(table[0]), 1e-12),
    ]
    return rep.as_dict(), checks, rows


def _run_hessian(cfg):
    n, L = cfg["n"], cfg["L_max"]
    H = variation.hessian_spectrum(n, L, cfg["degree"])
    zm = H.zero_mean_eigenvalues()
    const = float(H.Q[0, 0])
    exact = [variation.hessian_eigenvalue_at_zero(n, l) for l in range(L + 1)]
    res = {"n": n, "L_max": L, "eigenvalues": H.eigenvalues.tolist(), "top_zero_mean": float(zm[-1]),
           "constant_direction": const, "closed_form_by_degree": exact}
    checks = [
        _check("top zero-mean eigenvalue < 0", zm[-1] < 0, float(zm[-1]), 0.0),
        _check("constant direction eigenvalue = 0", abs(const) < 1e-8, const, 1e-8),
    ]
    return res, checks, None


def _run_kernel(cfg):
    n = cfg["n"]
    f = make_family(cfg["phi"])
    lhs, rhs = variation.kernel_identity_check(n, f, cfg["degree"])
    E = dirichlet_energy(f)
    rel = abs(lhs - rhs) / (1 + abs(lhs))
    checks = [
        _check("lhs = rhs", rel < 1e-6, rel, 1e-6),
        _check("lhs <= E(f)", lhs <= E + 1e-8, lhs - E, 1e-8),
    ]
    return {"n": n, "lhs": lhs, "rhs": rhs, "energy": E}, checks, None


def _run_dpp(cfg):
    n = cfg["n"]
    phi = make_family(cfg["phi"])
    est = montecarlo.mc_estimate_B(n, phi, cfg["samples"], cfg["seed"])
    B = gram.log_det_B(n, phi)
    res = {"n": n, "estimate": est.estimate, "stderr": est.stderr, "B": B, "samples": est.samples, "seed": est.seed}
    tol = 3 * est.stderr
    checks = [_check("MC estimate within 3 stderr of B_n", abs(est.estimate - B) <= tol + 1e-12, est.estimate - B, tol)]
    if n <= 2:
        norm = montecarlo.normalization_check(n, build_quadrature(max(n, 1)))
        res["normalization"] = norm
        checks.append(_check("int K_n = 1", abs(norm - 1) < 1e-6, norm - 1, 1e-6))
    if cfg.get("dump_samples"):
        montecarlo.write_samples_csv(cfg["dump_samples"], montecarlo.sample_batch(n, min(cfg["samples"], 10000), cfg["seed"]))
    return res, checks, None


def _run_szego(cfg):
    phi = make_circle(cfg["circle"])
    N = cfg["max_n"]
    scan = szego.monotonicity_scan(phi, N)
    limit = szego.strong_szego_constant(phi)
    gaps = [0.5 * phi.energy() + (n + 1) * phi.mean - b for n, b in enumerate(scan.values)]
    rows = [("n", "B_n", "B_n_minus_mean", "szego_gap")] + [
        (n, repr(b), repr(c), repr(g)) for n, (b, c, g) in enumerate(zip(scan.values, scan.normalized, gaps))
    ]
    checks = [
        _check("B_n - (n+1) phi_0 nondecreasing", scan.monotone, scan.worst_step, -1e-10),
        _check("gap >= 0", min(gaps) >= -1e-9, min(gaps), -1e-9),
        _check("strong Szego limit", abs(scan.normalized[-1] - limit) < 1e-6, scan.normalized[-1] - limit, 1e-6),
    ]
    return {"max_n": N, "B": scan.values, "strong_szego_constant": limit, "gaps": gaps}, checks, rows


def _run_scan(cfg, zonal=False):
    reports = []
    opts = harness.AscentOptions(max_iter=cfg["max_iter"])
    for n in cfg["n_list"]:
        fn = harness.zonal_scan if zonal else harness.conjecture_scan
        rep = fn(n, cfg["trials"], tuple(cfg["energy_range"]), cfg["seed"], cfg["L_max"], opts)
        reports.append(rep.as_dict())
    max_A = max(r["max_A"] for r in reports)
    checks = [_check("max A_n <= 1e-6", max_A <= 1e-6, max_A, 1e-6)]
    if zonal:
        off = max(t["offdiag_max"] for r in reports for t in r["trials"])
        checks.append(_check("zonal Gram matrices diagonal", off < 1e-12, off, 1e-12))
    candidates = [c for r in reports for c in r["candidates"]]
    return {"scans": reports, "max_A": max_A, "violation_candidates": candidates}, checks, None


def _run_d0(cfg):
    phi = make_family(cfg["phi"])
    rep = harness.d0_asymptotic(phi, cfg["n_list"])
    rows = [("n", "gap")] + [(n, repr(g)) for n, g in zip(rep.n, rep.gaps)]
    err = abs(rep.D0 - rep.half_energy)
    return rep.as_dict(), [_check("extrapolated D_0 = E/2", err < 1e-3, err, 1e-3)], rows


def _run_decay(cfg):
    phi = make_family(cfg["phi"])
    if dirichlet_energy(phi) <= 0:
        raise ConfigError("decay needs a nonconstant phi")
    rep = harness.large_energy_decay(cfg["n"], phi, cfg["t_list"])
    checks = [
        _check("A_n eventually strictly decreasing", rep.decreasing_from is not None, rep.decreasing_from, None),
        _check("A_n negative at the largest t", rep.A[-1] < 0, rep.A[-1], 0.0),
    ]
    return rep.as_dict(), checks, None


def _run_lemma(cfg):
    n = cfg["n"]
    if n > 5:
        raise ConfigError("lemma check runs exhaustively only for n <= 5")
    rng = np.random.default_rng(cfg["seed"])
    worst = -np.inf
    for _ in range(cfg["trials"]):
        k = int(rng.integers(1, 12))
        radii = np.exp(rng.uniform(-2, 2, k))
        weights = rng.uniform(0.1, 1.0, k)
        a = np.sort(rng.uniform(0, 4, n + 1))
        _, best, s_id = gram.max_permutation_product(a, radii, weights)
        worst = max(worst, best - s_id)
    dom = []
    for t in range(10):
        phi = make_family({"type": "random", "L_max": 4, "energy": 2.0, "seed": int(rng.integers(2**31))})
        rule = build_quadrature(gram.default_degree(n, 4))
        ld, bound = gram.determinant_domination_check(n, evaluate(phi, rule))
        dom.append(ld - bound)
    checks = [
        _check("S_sigma <= S_id", worst <= 1e-12, worst, 1e-12),
        _check("determinant domination", max(dom) <= 1e-12, max(dom), 1e-12),
    ]
    return {"n": n, "max_log_ratio": worst, "domination_log_margin": dom}, checks, None


RUNNERS = {
    "functional": _run_functional,
    "jn": _run_jn,
    "hessian": _run_hessian,
    "kernel-identity": _run_kernel,
    "dpp": _run_dpp,
    "szego": _run_szego,
    "scan": _run_scan,
    "zonal-scan": lambda cfg: _run_scan(cfg, zonal=True),
    "d0": _run_d0,
    "decay": _run_decay,
    "lemma": _run_lemma,
}


# --------------------------------------------------------------------------
# reports


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def build_report(cfg: dict, results: dict, checks: list[dict]) -> dict:
    return {
        "schema": SCHEMA_ID,
        "header": {"timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")},
        "command": cfg["command"],
        "inputs": {k: v for k, v in cfg.items() if k not in ("output", "csv", "dump_samples")},
        "versions": {"mtlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "results": results,
        "checks": checks,
        "status": "ok" if all(c["passed"] for c in checks) else "check_failed",
    }


def dumps(report: dict) -> str:
    return json.dumps(_sanitize(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_csv(path, rows) -> None:
    buf = io.StringIO()
    csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n").writerows(rows)
    if path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue())


def run(config: dict) -> int:
    """Execute one experiment config; returns the process exit code."""
    cfg, _ = resolve(config)
    with threadpool_limits(limits=cfg["threads"]):
        results, checks, rows = RUNNERS[cfg["command"]](cfg)
    report = build_report(cfg, results, checks)
    text = dumps(report)
    if cfg["output"]:
        Path(cfg["output"]).write_text(text)
    else:
        sys.stdout.write(text)
    if rows is not None and cfg["csv"]:
        write_csv(cfg["csv"], rows)
    return 0 if report["status"] == "ok" else 2


def validate(path) -> tuple[dict, list[str]]:
    """Schema-check a config file without running it."""
    return resolve(load_config(path))


# --------------------------------------------------------------------------
# argument parsing


def _csv_numbers(kind):
    def parse(text):
        return [kind(x) for x in text.split(",") if x.strip()]

    return parse


def _add_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags override its fields")
    p.add_argument("--n", type=int)
    p.add_argument("--n-list", dest="n_list", type=_csv_numbers(int))
    p.add_argument("--phi", help="family descriptor, e.g. dipole:1 or a JSON object")
    p.add_argument("--circle", help="circle function for szego, e.g. cos:1 or random:K_max=4,seed=0")
    p.add_argument("--degree", type=int, help="quadrature degree override")
    p.add_argument("--L-max", dest="L_max", type=int)
    p.add_argument("--max-n", dest="max_n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--energy-range", dest="energy_range", type=_csv_numbers(float))
    p.add_argument("--t-list", dest="t_list", type=_csv_numbers(float))
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--output", "-o", help="report path (default: stdout)")
    p.add_argument("--csv", help="table path ('-' for stdout)")
    p.add_argument("--dump-samples", dest="dump_samples", help="CSV dump of sampled configurations (dpp)")
    p.add_argument("--threads", type=int, help="cap on BLAS worker threads; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in COMMANDS:
        _add_flags(sub.add_parser(cmd))
    v = sub.add_parser("validate", help="schema-check a config file without running it")
    v.add_argument("path")
    return parser


def _error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"schema": SCHEMA_ID, "error": {"kind": kind, "message": message}}) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _error("usage", str(exc))
        return 1
    except SystemExit as exc:  # --help
        return 1 if exc.code else 0
    try:
        if args.command == "validate":
            cfg, defaulted = validate(args.path)
            sys.stdout.write(dumps({"schema": SCHEMA_ID, "valid": True, "resolved": cfg, "defaulted": defaulted}))
            return 0
        flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("config", "command")}
        config = load_config(args.config) if args.config else {}
        if config.get("command", args.command) != args.command:
            raise ConfigError(f"config is for {config['command']!r}, not {args.command!r}")
        config.update(flags)
        config["command"] = args.command
        return run(config)
    except ConfigError as exc:
        _error("config", str(exc))
        return 1
    except FileNotFoundError as exc:
        _error("usage", str(exc))
        return 1
    except np.linalg.LinAlgError as exc:
        _error("numerical", str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
