"""
Command-line experiment runner.

    rieszlab <command> [--config cfg.json] [--seed N] [--out DIR] [--threads N]

Every command writes ``report.json`` (sorted keys, embedding the resolved
config, the seed and the harmonic-basis cache version) and zero or more CSV
tables into ``--out``. Exit codes: 0 success, 2 configuration error,
3 numerical-invariant failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import zlib
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, circle, estimators, harmonics, kernels, rw, sphere
from .poly import MonomialPoly

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------ seeds ---

def substream(seed, label):
    """A 64-bit seed derived from (seed, label); stable across runs and platforms."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(label.encode()),))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------- schemas ---

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_T_GRID = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}
_POS_INT = {"type": "integer", "minimum": 1}

_CIRCLE_SPEC = {
    "type": "object",
    "properties": {"J": {"type": "array", "items": _POS_INT, "minItems": 1},
                   "c": {"type": "array", "items": _COMPLEX}},
    "required": ["J", "c"],
}

_TRIPLE = {
    "type": "object",
    "properties": {
        "delta": {"type": "number"},
        "factors": {"type": "array", "items": {
            "type": "object",
            "properties": {"j": _POS_INT, "a": _COMPLEX, "R": {"type": "object"}},
            "required": ["j", "a", "R"],
        }},
    },
    "required": ["delta", "factors"],
}

_COMMON = {"seed": {"type": "integer", "minimum": 0}}

SCHEMAS = {
    "circle-dim": {
        "type": "object", "additionalProperties": False,
        "properties": {**_COMMON, "spec": _CIRCLE_SPEC, "spec_path": {"type": "string"},
                       "K": _POS_INT, "window": _POS_INT,
                       "method": {"enum": ["extrapolate", "max"]},
                       "N": {"type": "integer", "minimum": 0}, "t_grid": _T_GRID,
                       "M": _POS_INT, "cutoff": _POS_INT},
    },
    "sphere-dim": {
        "type": "object", "additionalProperties": False,
        "properties": {**_COMMON, "triple": _TRIPLE, "triple_path": {"type": "string"},
                       "K": _POS_INT, "window": _POS_INT,
                       "method": {"enum": ["extrapolate", "max"]},
                       "spectral_K": {"type": "integer", "minimum": 0}, "t_grid": _T_GRID,
                       "mc_pairs": {"type": "integer", "minimum": 0}},
    },
    "rw-search": {
        "type": "object", "additionalProperties": False,
        "properties": {**_COMMON, "j": _POS_INT, "budget": _POS_INT,
                       "depth": {"type": "integer", "minimum": 0}, "n_random": {"type": "integer", "minimum": 0}},
    },
    "slice-check": {
        "type": "object", "additionalProperties": False,
        "properties": {**_COMMON, "triple": _TRIPLE, "triple_path": {"type": "string"},
                       "K": {"type": "integer", "minimum": 0}, "slices": {"type": "integer", "minimum": 2},
                       "functions": {"type": "array", "items": {
                           "type": "object",
                           "properties": {"name": {"type": "string"}, "terms": {"type": "array"}},
                           "required": ["name", "terms"]}}},
    },
    "plh-demo": {
        "type": "object", "additionalProperties": False,
        "properties": {**_COMMON, "n": {"type": "integer", "minimum": 2, "maximum": 6},
                       "samples": {"type": "integer", "minimum": 100}, "cutoff": _POS_INT,
                       "gap": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
    },
    "calibrate": {
        "type": "object", "additionalProperties": False,
        "properties": {**_COMMON, "samples": {"type": "integer", "minimum": 1000},
                       "manifolds": {"type": "array", "items": {"enum": ["circle", "sphere", "torus2"]}}},
    },
}

_DEFAULT_TRIPLE = {"delta": 0.7, "factors": [
    {"j": 1, "a": [0.9, 0.0], "R": {"balanced_monomial": True}},
    {"j": 3, "a": [0.9, 0.0], "R": {"balanced_monomial": True}},
]}

DEFAULTS = {
    "circle-dim": {"spec": {"J": [3 ** k for k in range(1, 9)], "c": [[0.9, 0.0]] * 8},
                   "method": "extrapolate", "N": 4,
                   "t_grid": [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], "M": 4096},
    "sphere-dim": {"triple": _DEFAULT_TRIPLE, "method": "extrapolate", "spectral_K": 2,
                   "t_grid": [0.5, 1.0, 1.5, 2.0, 2.5], "mc_pairs": 200_000},
    "rw-search": {"j": 2, "budget": 400, "depth": rw.DEFAULT_DEPTH, "n_random": 3},
    "slice-check": {"triple": _DEFAULT_TRIPLE, "slices": 10_000},
    "plh-demo": {"n": 2, "samples": 10_000, "cutoff": 8, "gap": 0.2},
    "calibrate": {"samples": 10_000, "manifolds": ["circle", "sphere", "torus2"]},
}


# -------------------------------------------------------------- plumbing ---

def load_config(command, path, seed):
    cfg = {}
    base = Path.cwd()
    if path is not None:
        try:
            cfg = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
        base = Path(path).resolve().parent
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    resolved = dict(DEFAULTS[command])
    for alt, main in (("spec_path", "spec"), ("triple_path", "triple")):
        if alt in cfg:
            resolved.pop(main, None)
    resolved.update(cfg)
    if seed is not None:
        resolved["seed"] = seed
    resolved.setdefault("seed", 0)
    return resolved, base


def _load_json_file(path, base):
    p = Path(path)
    if not p.is_absolute():
        p = base / p
    try:
        return json.loads(p.read_text()), p.parent
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from exc


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, complex):
        return [_jsonable(x.real), _jsonable(x.imag)]
    return x


def write_json(path, obj):
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([("%.17g" % v) if isinstance(v, (float, np.floating)) else v for v in row])


def _envelope(command, cfg, bidegrees=()):
    return {
        "command": command,
        "config": cfg,
        "seed": cfg["seed"],
        "version": __version__,
        "basis_cache": {"version": harmonics.CACHE_VERSION,
                        "bidegrees": [list(b) for b in sorted(bidegrees)]},
    }


# --------------------------------------------------------------- commands ---

def run_circle_dim(cfg, base, out):
    if "spec_path" in cfg:
        obj, _ = _load_json_file(cfg["spec_path"], base)
    else:
        obj = cfg["spec"]
    try:
        spec = circle.CircleRieszSpec.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid circle spec: {exc}") from exc
    try:
        rep = circle.dimension_report(spec.J, np.abs(spec.c), cfg.get("K"), cfg.get("window"),
                                      cfg["method"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    n = min(cfg["N"], len(spec))
    dens = circle.partial_product(spec, n)
    cutoff = cfg.get("cutoff", max(1, dens.max_frequency()))
    rows = []
    for t in cfg["t_grid"]:
        if not 0 < t < 1:
            raise ConfigError(f"t={t} outside (0, 1)")
        ef = circle.energy_fourier(dens, t, cutoff)
        ed = circle.energy_direct(dens, t, cfg["M"])
        rows.append((float(t), ef, ed))
    write_csv(out / "energies.csv", ["t", "energy_fourier", "energy_direct"], rows)
    ratios = [d / f for _, f, d in rows]
    report = _envelope("circle-dim", cfg)
    report.update({"dimension": rep.to_json(), "bound": rep.hausdorff_lb,
                   "energy_factors": n,
                   "energies": [{"t": t, "energy_fourier": f, "energy_direct": d} for t, f, d in rows],
                   "ratio_bracket": [min(ratios), max(ratios)]})
    ok = all(math.isfinite(r) and r > 0 for r in ratios)
    return report, ok


def _triple(cfg, base):
    if "triple_path" in cfg:
        obj, tbase = _load_json_file(cfg["triple_path"], base)
    else:
        obj, tbase = cfg["triple"], base
    try:
        return sphere.triple_from_json(obj, tbase)
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"invalid triple: {exc}") from exc


def run_sphere_dim(cfg, base, out):
    triple = _triple(cfg, base)
    val = sphere.validate(triple)
    try:
        bnd = sphere.bounds(triple, cfg.get("K"), cfg.get("window"), cfg["method"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ks = cfg["spectral_K"]
    if ks > len(triple):
        raise ConfigError(f"spectral_K={ks} exceeds the {len(triple)} factors")
    prod = sphere.partial_product(triple, ks)
    spec_rep, dec = sphere.spectrum_report(prod)
    rows = []
    for i, t in enumerate(cfg["t_grid"]):
        if not 0 < t < 3:
            raise ConfigError(f"t={t} outside (0, 3)")
        es = harmonics.sphere_energy_sum(dec, t)
        if cfg["mc_pairs"]:
            mc = sphere.mc_energy(prod, t, cfg["mc_pairs"], substream(cfg["seed"], f"mc/{i}"))
            rows.append((float(t), es, mc.estimate, mc.stderr))
        else:
            rows.append((float(t), es, float("nan"), float("nan")))
    write_csv(out / "energies.csv", ["t", "energy_sum", "mc_estimate", "mc_stderr"], rows)
    mass = prod.mass()
    checks = {
        "mass_error": abs(mass - 1),
        "real_valued": prod.is_real(),
        "parseval_error": spec_rep["parseval_error"],
        "off_structure_mass": spec_rep["off_structure_mass"],
    }
    ok = (val.valid and checks["mass_error"] < sphere.MASS_TOL and checks["real_valued"]
          and checks["parseval_error"] <= 1e-9 * max(1.0, spec_rep["norm_sq"])
          and checks["off_structure_mass"] < 1e-10)
    report = _envelope("sphere-dim", cfg, dec.entries.keys())
    report.update({"validation": val.to_json(), "dimension": bnd.to_json(),
                   "bound": bnd.lower_bound, "spectral_K": ks, "spectrum": spec_rep,
                   "checks": checks,
                   "energies": [{"t": t, "energy_sum": s, "mc_estimate": m, "mc_stderr": e}
                                for t, s, m, e in rows]})
    return report, ok


def run_rw_search(cfg, base, out):
    cert = rw.search(cfg["j"], budget=cfg["budget"], seed=cfg["seed"], depth=cfg["depth"],
                     n_random=cfg["n_random"])
    write_json(out / "certificate.json", cert.to_json())
    ok = 1 - 1e-9 <= cert.sup_bound <= 1 + 1e-6 and cert.delta <= 1
    write_csv(out / "coeffs.csv", ["i", "re", "im"],
              [(i, float(c.real), float(c.imag)) for i, c in enumerate(cert.coeffs)])
    report = _envelope("rw-search", cfg)
    report.update({"certificate": cert.to_json(), "delta": cert.delta})
    return report, ok


def _default_functions(triple):
    z1, z2 = MonomialPoly.coordinate(0), MonomialPoly.coordinate(1)
    out = [("one", MonomialPoly.constant(1.0)), ("z1_z1bar", z1 * z1.conj()),
           ("z1bar", z1.conj())]
    if triple.J:
        j = triple.J[-1]
        out.append(("z2bar_pow_top", z2.conj() ** j))
    out.append(("z1_z2sq", z1 * z2 * z2))
    return out


def run_slice_check(cfg, base, out):
    triple = _triple(cfg, base)
    K = cfg.get("K", len(triple))
    if K > len(triple):
        raise ConfigError(f"K={K} exceeds the {len(triple)} factors")
    if "functions" in cfg:
        try:
            funcs = [(f["name"], MonomialPoly.from_records(f["terms"])) for f in cfg["functions"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid test function: {exc}") from exc
    else:
        funcs = _default_functions(triple)
    rows = []
    ok = True
    for i, (name, f) in enumerate(funcs):
        res = sphere.disintegration_check(triple, K, f, cfg["slices"],
                                          substream(cfg["seed"], f"slice/{i}"))
        ok &= res.discrepancy <= 4 * res.stderr + 1e-12
        rows.append((name, res))
    write_csv(out / "slices.csv", ["function", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "stderr"],
              [(n, r.lhs.real, r.lhs.imag, r.rhs.real, r.rhs.imag, r.stderr) for n, r in rows])
    report = _envelope("slice-check", cfg)
    report.update({"K": K, "results": [{"function": n, **r.to_json()} for n, r in rows]})
    return report, ok


def run_plh_demo(cfg, base, out):
    spec, rep = estimators.plh_example(cfg["n"], samples=cfg["samples"],
                                       seed=substream(cfg["seed"], "plh"),
                                       cutoff=cfg["cutoff"], gap=cfg["gap"])
    box = estimators.box_counting(spec.sample(cfg["samples"], substream(cfg["seed"], "plh")))
    write_csv(out / "box.csv", ["scale", "count"], [(int(s), int(c)) for s, c in box.table()])
    rows = []
    for key in ("energy_below", "energy_above"):
        e = rep[key]
        rows += [(e["t"], c, s) for c, s in zip(e["cutoffs"], e["sums"])]
    write_csv(out / "energy.csv", ["t", "cutoff", "partial_sum"], rows)
    report = _envelope("plh-demo", cfg)
    report.update(rep)
    ok = rep["pluriharmonic"]["pluriharmonic"] and rep["transition_separates"]
    return report, ok


GATES = {"circle": (0.9, 1.1), "sphere": (2.7, 3.3), "torus2": (1.8, 2.2)}


def run_calibrate(cfg, base, out):
    n = cfg["samples"]
    results = {}
    rows = []
    ok = True
    for name in cfg["manifolds"]:
        s = substream(cfg["seed"], f"calibrate/{name}")
        if name == "circle":
            samples = estimators.uniform_circle_samples(n, s)
        elif name == "sphere":
            samples = estimators.uniform_sphere_samples(n, s)
        else:
            samples = estimators.uniform_torus_samples(n, 2, s)
        est = estimators.correlation_dimension(samples)
        lo, hi = GATES[name]
        passed = lo <= est.value <= hi
        ok &= passed
        results[name] = {**est.to_json(), "gate": [lo, hi], "passed": passed}
        rows += [(name, r, c) for r, c in est.table()]
    write_csv(out / "correlation.csv", ["manifold", "radius", "correlation"], rows)
    report = _envelope("calibrate", cfg)
    report["results"] = results
    return report, ok


COMMANDS = {
    "circle-dim": run_circle_dim,
    "sphere-dim": run_sphere_dim,
    "rw-search": run_rw_search,
    "slice-check": run_slice_check,
    "plh-demo": run_plh_demo,
    "calibrate": run_calibrate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="rieszlab", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, help="worker threads for the numba kernels")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    kernels.set_threads(args.threads)
    out = Path(args.out)
    try:
        cfg, base = load_config(args.command, args.config, args.seed)
        out.mkdir(parents=True, exist_ok=True)
        report, ok = COMMANDS[args.command](cfg, base, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report["status"] = "ok" if ok else "invariant_failure"
    write_json(out / "report.json", report)
    if not ok:
        print("numerical invariant failed; see report.json", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
