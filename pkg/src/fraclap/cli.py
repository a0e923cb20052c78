"""Command-line front end.

    fraclap <command> [--config cfg.json] [--n N] [--s S] [--seed K] ...

The config is one JSON document validated against ``CONFIG_SCHEMA``; flags
override top-level scalar keys.  Exit status: 0 pass, 2 verification
failure, 1 usage, config or engine error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields as dc_fields, replace
from typing import Optional

import jsonschema
import numpy as np

from . import catalog
from .ballsolver import NESTED, DirichletProblem, ball_samples, poisson_extend, residuals, solve_dirichlet
from .core import Ball, FracLapError, ModulusSpec, QuadBudget, ScalarField
from .expr import FieldSpec, compile as compile_field
from .kernels import constants
from .quad import frac_laplacian, riesz_potential
from .schauder import (CascadeConfig, VerificationReport, cascade_report, default_pairs, default_riesz_pairs,
                       dyadic_cascade, verify_lemma_derivative_estimate, verify_lemma_supnorm_estimate,
                       verify_riesz_holder, verify_schauder)

COMMANDS = ("constants", "eval", "riesz", "extend", "solve", "cascade", "verify-schauder", "verify-lemma31",
            "verify-lemma32", "verify-riesz")
REPORT_COLUMNS = ("probe_id", "scale", "lhs", "rhs", "ratio", "note")

_num = {"type": "number"}
_point = {"type": "array", "items": _num, "minItems": 2, "maxItems": 3}
_budget_props = {f.name: ({"type": "integer", "minimum": 0} if f.type in ("int", int) else _num)
                 for f in dc_fields(QuadBudget)}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "n": {"enum": [2, 3]},
        "s": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "budget": {"type": "object", "additionalProperties": False, "properties": _budget_props},
        "fields": {
            "type": "object",
            "propertyNames": {"pattern": "^[A-Za-z_][A-Za-z0-9_]*$"},
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "required": ["expr"],
                "properties": {
                    "expr": {"type": "string"},
                    "support_radius": {"type": "number", "exclusiveMinimum": 0},
                    "decay_M": {"type": "number", "minimum": 0},
                    "decay_p": {"type": "number", "minimum": 0},
                    "holder_alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "interface_radii": {"type": "array", "items": {"type": "number", "minimum": 0}},
                },
            },
        },
        "probes": {"type": "array", "items": {"oneOf": [_point, {"type": "array", "items": _point,
                                                                  "minItems": 2, "maxItems": 2}]}},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"format": {"enum": ["csv", "json"]}, "path": {"type": "string"}}},
        "ball": {"type": "object", "additionalProperties": False, "required": ["radius"],
                 "properties": {"center": _point, "radius": {"type": "number", "exclusiveMinimum": 0}}},
        "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "family": {"type": "array", "items": {"type": "string"}},
        "modulus": {"type": "object", "additionalProperties": False, "required": ["kind"],
                    "properties": {"kind": {"enum": ["power", "log_lipschitz"]}, "C": _num, "alpha": _num,
                                   "domain_cap": _num}},
        "depth": {"type": "integer", "minimum": 2},
        "rho": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "ratio_cap": {"type": "number", "exclusiveMinimum": 0},
        "derivative_order": {"type": "integer", "minimum": 0, "maximum": 2},
        "grid": {"type": "integer", "minimum": 8},
        "anchor": _point,
        "residual_probes": {"type": "array", "items": _point},
    },
}

SCALAR_FLAGS = {"n": int, "s": float, "seed": int, "depth": int, "rho": float, "ratio_cap": float,
                "derivative_order": int, "grid": int}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# config handling


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/" + "/".join(str(p) for p in e.absolute_path)
        raise UsageError(f"config error at {where}: {e.message}") from None


def workers() -> int:
    raw = os.environ.get("FRACLAP_THREADS", "0").strip() or "0"
    try:
        k = int(raw)
    except ValueError:
        raise UsageError("FRACLAP_THREADS must be an integer") from None
    if k < 0:
        raise UsageError("FRACLAP_THREADS must be nonnegative")
    return k or (os.cpu_count() or 1)


def _budget(cfg: dict, base: QuadBudget) -> QuadBudget:
    return replace(base, **cfg.get("budget", {}))


def _field(cfg: dict, name: str, n: int, required: bool = True) -> Optional[ScalarField]:
    spec = cfg.get("fields", {}).get(name)
    if spec is None:
        if required:
            raise UsageError(f"config needs fields.{name}")
        return None
    sup = spec.get("support_radius")
    dec = (spec["decay_M"], spec.get("decay_p", 0.0)) if "decay_M" in spec else None
    return compile_field(FieldSpec(spec["expr"], n, support=Ball((0.0,) * n, sup) if sup else None, decay=dec,
                                   holder_hint=spec.get("holder_alpha"),
                                   interface_radii=tuple(spec.get("interface_radii", ()))))


def _ball(cfg: dict, n: int) -> Ball:
    b = cfg.get("ball", {"radius": 1.0})
    return Ball(tuple(b.get("center", (0.0,) * n)), b["radius"])


def _points(cfg: dict, n: int, default=None) -> np.ndarray:
    P = cfg.get("probes")
    if P is None:
        return default if default is not None else np.zeros((1, n))
    if any(len(p) != n or isinstance(p[0], list) for p in P):
        raise UsageError(f"probes must be points of dimension {n}")
    return np.array(P, float).reshape(-1, n)


def _pairs(cfg: dict, n: int, default) -> list:
    P = cfg.get("probes")
    if P is None:
        return default
    if any(not isinstance(p[0], list) or len(p[0]) != n or len(p[1]) != n for p in P):
        raise UsageError(f"probes must be pairs of points of dimension {n}")
    return [(np.array(a, float), np.array(b, float)) for a, b in P]


# ---------------------------------------------------------------------------
# artifacts


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def report_csv(r: VerificationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for p in r.probes:
        w.writerow([fmt(p.probe_id), fmt(p.scale), fmt(p.lhs), fmt(p.rhs), fmt(p.ratio), p.note])
    return buf.getvalue()


def grid_csv(X: np.ndarray, cols: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = X.shape[1]
    w.writerow([f"x{i + 1}" for i in range(n)] + list(cols))
    for i, x in enumerate(X):
        w.writerow([fmt(float(c)) for c in x] + [fmt(float(v[i])) for v in cols.values()])
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".fraclap-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(r: VerificationReport, format: str = "json", path: Optional[str] = None) -> str:
    text = report_csv(r) if format == "csv" else r.to_json() + "\n"
    if path:
        write_atomic(path, text)
    return text


# ---------------------------------------------------------------------------
# commands; each returns (artifact text, csv text, summary fields, passed)


def _map(fn, X):
    k = workers()
    if k == 1 or len(X) < 2:
        return [fn(x) for x in X]
    with ThreadPoolExecutor(k) as ex:
        return list(ex.map(fn, X))


def cmd_constants(cfg, n, s):
    k = constants(n, s)
    out = {"n": n, "s": s, "riesz_a": k.riesz_a, "poisson_c": k.poisson_c, "flap_C": k.flap_C,
           "bubble_k": k.bubble_k}
    return {"json": to_json(out), "csv": None}, {"probes": 0, "metric": ("max_residual", 0.0)}, True


def cmd_eval(cfg, n, s):
    k = constants(n, s)
    u = _field(cfg, "u", n)
    X = _points(cfg, n)
    q = _budget(cfg, QuadBudget())
    res = _map(lambda x: frac_laplacian(u, x, k, q), X)
    vals = np.array([r.value for r in res])
    err = np.array([r.est_error for r in res])
    flags = sorted({f for r in res for f in r.flags})
    rows = [{"point": x.tolist(), "value": float(v), "est_error": float(e)} for x, v, e in zip(X, vals, err)]
    return ({"json": to_json({"command": "eval", "results": rows, "flags": flags}),
             "csv": grid_csv(X, {"value": vals, "est_error": err})},
            {"probes": len(X), "metric": ("max_est_error", float(err.max(initial=0.0)))}, True)


def cmd_riesz(cfg, n, s):
    k = constants(n, s)
    f = _field(cfg, "f", n)
    X = _points(cfg, n)
    q = _budget(cfg, QuadBudget())
    res = _map(lambda x: riesz_potential(f, x, k, q), X)
    vals = np.array([r.value for r in res])
    err = np.array([r.est_error for r in res])
    rows = [{"point": x.tolist(), "value": float(v), "est_error": float(e)} for x, v, e in zip(X, vals, err)]
    return ({"json": to_json({"command": "riesz", "results": rows}),
             "csv": grid_csv(X, {"value": vals, "est_error": err})},
            {"probes": len(X), "metric": ("max_est_error", float(err.max(initial=0.0)))}, True)


def _grid_points(cfg, B):
    return _points(cfg, B.dim, ball_samples(B, cfg.get("grid", 8) ** B.dim - 1))


def cmd_extend(cfg, n, s):
    k = constants(n, s)
    g = _field(cfg, "g", n)
    B = _ball(cfg, n)
    u = poisson_extend(g, B, k, _budget(cfg, NESTED))
    X = _grid_points(cfg, B)
    vals = u.values(X)
    return ({"json": to_json({"command": "extend", "points": X.tolist(), "values": vals.tolist()}),
             "csv": grid_csv(X, {"value": vals})},
            {"probes": len(X), "metric": ("max_abs_value", float(np.abs(vals).max(initial=0.0)))}, True)


def _zero(n):
    return catalog.constant(n, 0.0)


def cmd_solve(cfg, n, s):
    k = constants(n, s)
    f = _field(cfg, "f", n)
    g = _field(cfg, "g", n, required=False) or _zero(n)
    B = _ball(cfg, n)
    u = solve_dirichlet(DirichletProblem(B, f, g, s), k, _budget(cfg, NESTED))
    X = _grid_points(cfg, B)
    vals = u.values(X)
    rp = cfg.get("residual_probes")
    u.residual_probe = residuals(u, k, probes=None if rp is None else np.array(rp, float).reshape(-1, n))
    worst = max((abs(r["residual"]) for r in u.residual_probe), default=0.0)
    return ({"json": to_json({"command": "solve", "points": X.tolist(), "values": vals.tolist(),
                              "residuals": u.residual_probe}),
             "csv": grid_csv(X, {"value": vals})},
            {"probes": len(X), "metric": ("max_residual", worst)}, True)


def _report_out(r: VerificationReport):
    ok = r.passed or r.informational
    return ({"json": r.to_json() + "\n", "csv": report_csv(r)},
            {"probes": len(r.probes), "metric": ("max_ratio", r.max_ratio)}, ok)


def cmd_cascade(cfg, n, s):
    k = constants(n, s)
    f = _field(cfg, "f", n)
    g = _field(cfg, "g", n, required=False) or _zero(n)
    q = _budget(cfg, NESTED)
    cc = CascadeConfig(rho=cfg.get("rho", 0.5), depth=cfg.get("depth", 5), order=s, budget=q,
                       grid=cfg.get("grid", 8))
    u = solve_dirichlet(DirichletProblem(Ball.unit(n), f, g, s), k, q)
    return _report_out(cascade_report(dyadic_cascade(u, f, cc, k), s, cc.rho))


def _modulus(cfg, f, B, seed):
    m = cfg.get("modulus")
    if m is None:
        return catalog.empirical_modulus(f, B, seed=seed)
    return ModulusSpec(m["kind"], C=m.get("C", 1.0), alpha=m.get("alpha", 1.0), domain_cap=m.get("domain_cap", 2.0))


def cmd_verify_schauder(cfg, n, s):
    k = constants(n, s)
    f = _field(cfg, "f", n)
    g = _field(cfg, "g", n, required=False) or _zero(n)
    B = Ball.unit(n)
    q = _budget(cfg, NESTED)
    cc = CascadeConfig(rho=cfg.get("rho", 0.5), depth=cfg.get("depth", 5), order=s, budget=q)
    m = _modulus(cfg, f, B, cfg.get("seed", 0))
    pairs = _pairs(cfg, n, default_pairs(n))
    return _report_out(verify_schauder(DirichletProblem(B, f, g, s), m, pairs, cc, k,
                                       ratio_cap=cfg.get("ratio_cap", 1e3)))


def _family(cfg, n, default):
    names = cfg.get("family")
    if names is None:
        return default
    return [_field(cfg, name, n) for name in names]


def cmd_verify_lemma31(cfg, n, s):
    k = constants(n, s)
    seed = cfg.get("seed", 0)
    fam = _family(cfg, n, [catalog.harmonic_exterior(n, seed + i) for i in range(4)])
    radii = cfg.get("radii", [1.0, 0.5, 0.25, 0.125])
    r = verify_lemma_derivative_estimate(fam, radii, cfg.get("derivative_order", 1), k, _budget(cfg, NESTED),
                                         grid=cfg.get("grid", 8))
    return _report_out(r)


def cmd_verify_lemma32(cfg, n, s):
    k = constants(n, s)
    fam = _family(cfg, n, [catalog.constant(n), catalog.cos_x1(n), catalog.power(n, 0.5)])
    radii = cfg.get("radii", [1.0, 0.5, 0.25, 0.125])
    return _report_out(verify_lemma_supnorm_estimate(fam, radii, k, _budget(cfg, NESTED), grid=cfg.get("grid", 8)))


def cmd_verify_riesz(cfg, n, s):
    k = constants(n, s)
    f = _field(cfg, "f", n, required=False) or catalog.smooth_plateau(n)
    if f.support is None:
        raise UsageError("verify-riesz needs a compactly supported f (fields.f.support_radius)")
    R = f.support.radius
    anchor = cfg.get("anchor") or (f.support.c + R * np.eye(n)[0]).tolist()
    pairs = _pairs(cfg, n, default_riesz_pairs(anchor, n))
    return _report_out(verify_riesz_holder(f, s, pairs, k, _budget(cfg, QuadBudget())))


HANDLERS = {"constants": cmd_constants, "eval": cmd_eval, "riesz": cmd_riesz, "extend": cmd_extend,
            "solve": cmd_solve, "cascade": cmd_cascade, "verify-schauder": cmd_verify_schauder,
            "verify-lemma31": cmd_verify_lemma31, "verify-lemma32": cmd_verify_lemma32,
            "verify-riesz": cmd_verify_riesz}

HANDLER_OPS = {"constants": "constants", "eval": "frac_laplacian", "riesz": "riesz_potential",
               "extend": "poisson_extend", "solve": "solve_dirichlet", "cascade": "dyadic_cascade",
               "verify-schauder": "verify_schauder", "verify-lemma31": "verify_lemma_derivative_estimate",
               "verify-lemma32": "verify_lemma_supnorm_estimate", "verify-riesz": "verify_riesz_holder"}


def run(cfg: dict, out=None) -> int:
    """Validate and execute one config; returns the exit status."""
    out = out or sys.stdout
    try:
        validate(cfg)
        n = cfg.get("n", 2)
        s = float(cfg.get("s", 0.5))
        outcfg = cfg.get("output", {})
        fmt_ = outcfg.get("format", "json")
        cmd = cfg["command"]
        arts, summ, ok = HANDLERS[cmd](cfg, n, s)
    except UsageError as e:
        print(f"fraclap: {e}", file=sys.stderr)
        return 1
    except (FracLapError, ValueError, ArithmeticError) as e:
        op = HANDLER_OPS.get(cfg.get("command"), "run") if isinstance(cfg, dict) else "run"
        print(f"fraclap: {op}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    text = arts.get(fmt_) or arts["json"]
    path = outcfg.get("path")
    if path:
        try:
            write_atomic(path, text)
        except OSError as e:
            print(f"fraclap: cannot write {path}: {e}", file=sys.stderr)
            return 1
    else:
        out.write(text)
    name, val = summ["metric"]
    status = "pass" if ok else "fail"
    print(f"{cmd} probes={summ['probes']} {name}={fmt(float(val))} {status}", file=out)
    return 0 if ok else 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraclap", description="Fractional Laplacian potential theory toolkit.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config document")
    for key, typ in SCALAR_FLAGS.items():
        ap.add_argument("--" + key.replace("_", "-"), dest=key, type=typ)
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code else 0
    cfg = {}
    if a.config:
        try:
            with open(a.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            print(f"fraclap: cannot read config: {e}", file=sys.stderr)
            return 1
        if not isinstance(cfg, dict):
            print("fraclap: config error at /: top level must be an object", file=sys.stderr)
            return 1
        if cfg.get("command", a.command) != a.command:
            print(f"fraclap: config command {cfg.get('command')!r} differs from {a.command!r}", file=sys.stderr)
            return 1
    cfg["command"] = a.command
    for key in SCALAR_FLAGS:
        v = getattr(a, key)
        if v is not None:
            cfg[key] = v
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
