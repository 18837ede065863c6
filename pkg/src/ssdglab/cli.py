"""Command-line front end.

    ssdglab dispersion  --config disp.json --out results/
    ssdglab cfl-map     --config map.json --threads 4
    ssdglab table1      --out results/

Exit codes: 0 success, 1 configuration error, 2 failed check.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import experiments as ex
from .output import write_table
from .schemes import SchemeError, SchemeSpec, equivalence_verdict, stability_violations
from .solver import InstabilityError, Mesh1D, assemble_system_matrix, convergence_study
from .timestepping import RK_METHODS, CflError

log = logging.getLogger("ssdglab")

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2

INITIAL_CONDITIONS = {"sin": np.sin, "cos": np.cos}

_SCHEME = {
    "type": "object",
    "properties": {
        "family": {"enum": ["DG", "ESFR", "EESFR", "SSDG", "GSFR"]},
        "p": {"type": "integer", "minimum": 0, "maximum": 12},
        "params": {"type": "array", "items": {"type": "number"}},
        "alpha": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "required": ["family", "p"],
    "additionalProperties": False,
}
_AXIS = {
    "type": "object",
    "properties": {
        "min": {"type": "number"},
        "max": {"type": "number"},
        "n": {"type": "integer", "minimum": 1},
        "spacing": {"enum": ["linear", "log"]},
    },
    "required": ["min", "max", "n"],
    "additionalProperties": False,
}
_RK = {"enum": sorted(RK_METHODS)}
_GRID_FAMILY = {"enum": ["SSDG", "EESFR"]}


def _obj(props: dict, required=(), **extra) -> dict:
    props = dict(props, command={"type": "string"})
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False, **extra}


SCHEMAS = {
    "dispersion": _obj(
        {"scheme": _SCHEME, "schemes": {"type": "array", "items": _SCHEME, "minItems": 1},
         "samples": {"type": "integer", "minimum": 3}},
        oneOf=[{"required": ["scheme"]}, {"required": ["schemes"]}],
    ),
    "cfl-map": _obj(
        {"family": _GRID_FAMILY, "p": {"type": "integer", "minimum": 2, "maximum": 12},
         "alpha": {"type": "number", "minimum": 0, "maximum": 1}, "rk": _RK,
         "param1": _AXIS, "param2": _AXIS, "theta_samples": {"type": "integer", "minimum": 3}},
        required=["family", "p", "rk", "param1", "param2"],
    ),
    "spectral-order": _obj(
        {"family": _GRID_FAMILY, "p": {"type": "integer", "minimum": 2, "maximum": 12},
         "alpha": {"type": "number", "minimum": 0, "maximum": 1},
         "param1": _AXIS, "param2": _AXIS,
         "schemes": {"type": "array", "items": _SCHEME, "minItems": 1},
         "theta_R": {"type": "number", "exclusiveMinimum": 0}},
        oneOf=[{"required": ["family", "p", "param1", "param2"]}, {"required": ["schemes"]}],
    ),
    "convergence": _obj(
        {"scheme": _SCHEME, "rk": _RK, "a": {"type": "number"},
         "mesh": {"type": "object", "properties": {"xl": {"type": "number"}, "xr": {"type": "number"},
                                                   "N": {"type": "integer", "minimum": 2}},
                  "required": ["xl", "xr"], "additionalProperties": False},
         "N_list": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 2},
         "t_final": {"type": "number", "exclusiveMinimum": 0},
         "initial_condition": {"enum": sorted(INITIAL_CONDITIONS)},
         "tau_policy": {"type": "object",
                        "properties": {"cfl_fraction": {"type": "number", "exclusiveMinimum": 0}},
                        "additionalProperties": False},
         "expect_order": {"type": "object",
                          "properties": {"value": {"type": "number"}, "tol": {"type": "number"}},
                          "required": ["value", "tol"], "additionalProperties": False}},
        required=["scheme"],
    ),
    "sysmatrix": _obj(
        {"scheme": _SCHEME, "a": {"type": "number"},
         "mesh": {"type": "object", "properties": {"xl": {"type": "number"}, "xr": {"type": "number"},
                                                   "N": {"type": "integer", "minimum": 2}},
                  "required": ["xl", "xr", "N"], "additionalProperties": False},
         "expect_max_eigenvalue": {"type": "object",
                                   "properties": {"re": {"type": "number"}, "im": {"type": "number"},
                                                  "tol": {"type": "number"}},
                                   "required": ["re", "im", "tol"], "additionalProperties": False}},
        required=["scheme", "mesh"],
    ),
    "equivalence": _obj(
        {"scheme": _SCHEME, "expect": {"enum": ["both", "FDG-only", "FR-only"]}},
        required=["scheme"],
    ),
    "table1": _obj({"theta_samples": {"type": "integer", "minimum": 3}}),
}

DEFAULTS = {
    "dispersion": {"samples": 401},
    "cfl-map": {"alpha": 0.0, "theta_samples": 400},
    "spectral-order": {"alpha": 0.0, "theta_R": math.pi / 4},
    "convergence": {"rk": "RK44", "a": 2.0, "mesh": {"xl": -math.pi, "xr": math.pi},
                    "N_list": [16, 32, 64, 128, 256], "t_final": math.pi,
                    "initial_condition": "sin", "tau_policy": {"cfl_fraction": 0.1}},
    "sysmatrix": {"a": 2.0},
    "equivalence": {},
    "table1": {"theta_samples": 400},
}

PARAM_NAMES = {"SSDG": ("c_p", "c_pm1"), "EESFR": ("q0", "q1")}


class ConfigError(ValueError):
    pass


def resolve_config(command: str, raw: dict) -> dict:
    """Validate ``raw`` against the command schema and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    if "command" in raw and raw["command"] != command:
        raise ConfigError(f"config is for command {raw['command']!r}, not {command!r}")
    try:
        jsonschema.validate(raw, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    cfg = copy.deepcopy(DEFAULTS[command])
    for key, value in raw.items():
        if key == "command":
            continue
        if isinstance(value, dict) and isinstance(cfg.get(key), dict):
            cfg[key] = {**cfg[key], **value}
        else:
            cfg[key] = value
    cfg["command"] = command
    for key in ("scheme",):
        if key in cfg:
            cfg[key] = _scheme(cfg[key]).to_dict()
    if "schemes" in cfg:
        cfg["schemes"] = [_scheme(s).to_dict() for s in cfg["schemes"]]
    return cfg


def _scheme(d: dict) -> SchemeSpec:
    try:
        return SchemeSpec.from_dict(d)
    except SchemeError as exc:
        raise ConfigError(str(exc)) from None


def _check_stable(spec: SchemeSpec, allow_unstable: bool):
    bad = stability_violations(spec)
    if bad and not allow_unstable:
        raise ConfigError(f"{spec.label()} is not linearly stable: " + "; ".join(bad)
                          + " (pass --allow-unstable to analyse it anyway)")


# -- commands ----------------------------------------------------------------


def cmd_dispersion(cfg, out, fmt, allow_unstable=False, threads=1):
    specs = [SchemeSpec.from_dict(s) for s in cfg.get("schemes", [cfg.get("scheme")])]
    for spec in specs:
        _check_stable(spec, allow_unstable)

    def run(spec):
        header, rows, _ = ex.dispersion_rows(spec, cfg["samples"])
        return write_table(out / f"dispersion_{spec.label()}", cfg, header, rows, fmt)

    paths = ex._map(run, specs, threads)
    return EXIT_OK, paths


def cmd_cfl_map(cfg, out, fmt, allow_unstable=False, threads=1):
    fam, p, rk = cfg["family"], cfg["p"], cfg["rk"]
    rows = ex.cfl_map(fam, p, rk, ex.axis_values(cfg["param1"]), ex.axis_values(cfg["param2"]),
                      cfg["alpha"], cfg["theta_samples"], threads)
    taus = np.array([r[2] for r in rows])
    meta = {}
    if np.isfinite(taus).any():
        best = rows[int(np.nanargmax(taus))]
        meta["argmax"] = {"param1": best[0], "param2": best[1], "tau_cfl": best[2],
                          "argmax_theta": best[3]}
    names = PARAM_NAMES[fam]
    path = write_table(out / f"cfl_map_{fam}_p{p}_{rk}", cfg,
                       [names[0], names[1], "tau_cfl", "argmax_theta"], rows, fmt, meta)
    return EXIT_OK, [path]


def cmd_spectral_order(cfg, out, fmt, allow_unstable=False, threads=1):
    theta_R = cfg["theta_R"]
    if "schemes" in cfg:
        specs = [SchemeSpec.from_dict(s) for s in cfg["schemes"]]
        for spec in specs:
            _check_stable(spec, allow_unstable)
        orders = ex._map(lambda s: ex._safe_order(s, theta_R), specs, threads)
        rows = [[s.family, s.p, ";".join(format(v, ".17g") for v in s.params), s.alpha, a]
                for s, a in zip(specs, orders)]
        path = write_table(out / "spectral_order_schemes", cfg,
                           ["family", "p", "params", "alpha", "A_T"], rows, fmt)
        return EXIT_OK, [path]
    fam, p = cfg["family"], cfg["p"]
    rows = ex.spectral_order_map(fam, p, ex.axis_values(cfg["param1"]), ex.axis_values(cfg["param2"]),
                                 cfg["alpha"], theta_R, threads)
    names = PARAM_NAMES[fam]
    path = write_table(out / f"spectral_order_{fam}_p{p}", cfg, [names[0], names[1], "A_T"], rows, fmt)
    return EXIT_OK, [path]


def cmd_convergence(cfg, out, fmt, allow_unstable=False, threads=1):
    spec = SchemeSpec.from_dict(cfg["scheme"])
    _check_stable(spec, allow_unstable)
    u0 = INITIAL_CONDITIONS[cfg["initial_condition"]]
    mesh = cfg["mesh"]
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        rec = convergence_study(spec, cfg["rk"], cfg["a"], (mesh["xl"], mesh["xr"]), u0,
                                cfg["t_final"], cfg["N_list"], cfg["tau_policy"]["cfl_fraction"],
                                executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    meta = {"tau_cfl": rec.tau_cfl, "temporal_check": rec.temporal_check}
    path = write_table(out / f"convergence_{spec.label()}_{cfg['rk']}", cfg,
                       ["N", "dx", "l2_error", "order"], rec.rows(), fmt, meta)
    ok = rec.temporal_check < 0.01
    if not ok:
        log.error("temporal error not negligible: half-step rerun changed the error by %.3g%%",
                  100 * rec.temporal_check)
    if "expect_order" in cfg:
        want = cfg["expect_order"]
        if abs(rec.finest_order - want["value"]) > want["tol"]:
            log.error("observed order %.4f outside %.4f +/- %.4f", rec.finest_order, want["value"], want["tol"])
            ok = False
    return (EXIT_OK if ok else EXIT_CHECK), [path]


def cmd_sysmatrix(cfg, out, fmt, allow_unstable=False, threads=1):
    spec = SchemeSpec.from_dict(cfg["scheme"])
    m = cfg["mesh"]
    try:
        sm = assemble_system_matrix(spec, Mesh1D(m["xl"], m["xr"], m["N"]), cfg["a"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ev = sm.eigenvalues
    order = np.lexsort((ev.imag, -ev.real))
    lam = sm.max_re_eigenvalue
    meta = {"max_re_eigenvalue": {"re": lam.real, "im": lam.imag}}
    path = write_table(out / f"sysmatrix_{spec.label()}_N{m['N']}", cfg, ["re", "im"],
                       [(ev[i].real, ev[i].imag) for i in order], fmt, meta)
    print(f"max real part eigenvalue: {lam.real:.6g} {lam.imag:+.6g}i")
    if "expect_max_eigenvalue" in cfg:
        want = cfg["expect_max_eigenvalue"]
        if abs(lam.real - want["re"]) > want["tol"] or abs(lam.imag - want["im"]) > want["tol"]:
            return EXIT_CHECK, [path]
    return EXIT_OK, [path]


def cmd_equivalence(cfg, out, fmt, allow_unstable=False, threads=1):
    spec = SchemeSpec.from_dict(cfg["scheme"])
    verdict = equivalence_verdict(spec)
    print(f"{spec.label()}: {verdict}")
    path = write_table(out / f"equivalence_{spec.label()}", cfg, ["family", "p", "alpha", "verdict"],
                       [(spec.family, spec.p, spec.alpha, verdict)], fmt)
    if "expect" in cfg and cfg["expect"] != verdict:
        return EXIT_CHECK, [path]
    return EXIT_OK, [path]


def cmd_table1(cfg, out, fmt, allow_unstable=False, threads=1):
    rows = ex.reproduce_table1(cfg["theta_samples"], threads)
    cols = ["family", "p", "rk", "param1", "param2", "reference_tau", "tau_printed", "tau_box",
            "box_param1", "box_param2", "pass"]
    data = [(r.family, r.p, r.rk, *r.params, r.reference_tau, r.tau_printed, r.tau_box, *r.box_params, r.passed)
            for r in rows]
    path = write_table(out / "table1", cfg, cols, data, fmt)
    for r in rows:
        print(f"{r.family:5s} p={r.p} {r.rk}: reference {r.reference_tau:.3f}  printed {r.tau_printed:.4f}  "
              f"box-max {r.tau_box:.4f}  {'ok' if r.passed else 'FAIL'}")
    return (EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK), [path]


COMMANDS = {
    "dispersion": cmd_dispersion,
    "cfl-map": cmd_cfl_map,
    "spectral-order": cmd_spectral_order,
    "convergence": cmd_convergence,
    "sysmatrix": cmd_sysmatrix,
    "equivalence": cmd_equivalence,
    "table1": cmd_table1,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssdglab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON run configuration")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--allow-unstable", action="store_true")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = json.loads(args.config.read_text(encoding="utf-8")) if args.config else {}
        cfg = resolve_config(args.command, raw)
        code, paths = COMMANDS[args.command](cfg, args.out, args.format, args.allow_unstable,
                                             max(1, args.threads))
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InstabilityError, CflError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    for p in paths:
        print(f"wrote {p}")
    return code


if __name__ == "__main__":
    sys.exit(main())
