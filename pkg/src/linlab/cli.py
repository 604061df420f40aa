"""Command-line entry point: parse a JSON run config, dispatch to the library,
write reports, CSV series and images atomically.

Usage: ``linlab <command> --config PATH [--out DIR]``. Exit status is 0 on
pass or success, 2 on an inconclusive verdict, 1 on a failed check or error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import tempfile
import time
from dataclasses import dataclass, field
from importlib import metadata
from typing import Any, Optional, Union

import numpy as np

from .growth import (GrowthRecord, growth_bracket_check, growth_series, holder_bounds_fit,
                     min_modulus_continuum, order_estimate, radii_sequence, valiron_order)
from .linearizer import PoincareLinearizer, eval_large, residual, select_fixed_point
from .maps import (OracleLinearizer, PolynomialMap, QRPowerMap, find_fixed_points, oracle_eval,
                   periodic_points)

COMMANDS = ("fixpoints", "periodic", "linearize", "residuals", "growth", "order", "bracket",
            "holder", "radii", "continuum", "web", "render", "julia", "pits", "oracle-check")
EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2
CSV_DIGITS = 12

REQUIRED = object()

# per-command parameters: name -> (kind, default)
_PARAMS: dict[str, dict[str, tuple]] = {
    "fixpoints": {},
    "periodic": {"max_period": ("period", 3), "tolerance": ("posfloat", 1e-9)},
    "linearize": {"points": ("pairs", REQUIRED)},
    "residuals": {"n_points": ("posint", 1000), "tolerance": ("posfloat", 1e-8)},
    "growth": {"log_r_min": ("float", 0.0), "log_r_max": ("float", 10.0),
               "samples": ("posint", 16)},
    "order": {"log_r_min": ("float", 5.0), "log_r_max": ("float", 200.0),
              "samples": ("posint", 64), "tolerance": ("posfloat", 0.05)},
    "bracket": {"d": ("optint", None), "K": ("float1", 1.0), "window": ("window", [5.0, 200.0]),
                "samples": ("posint", 48), "tolerance": ("posfloat", 0.1)},
    "holder": {"j": ("posint", 4), "radii": ("window", [10.0, 1e6]), "n_radii": ("posint", 48),
               "n_angles": ("posint", 64), "K": ("optfloat1", None)},
    "radii": {"R": ("posfloat", REQUIRED), "N": ("nonneg", 4), "mu": ("mu", 2.0),
              "base": ("mu", 2.0), "from_n": ("nonneg", 0)},
    "continuum": {"log_r": ("posfloat", REQUIRED), "mu": ("mu", 2.0),
                  "grid": ("grid", [512, 1024]), "K": ("float1", 1.0),
                  "maximize": ("bool", False), "cross_check": ("bool", False)},
    "web": {"R": ("posfloat", REQUIRED), "mu": ("mu", 2.0), "N": ("nonneg", 3),
            "grid": ("grid", [512, 1024]), "K": ("float1", 1.0)},
    "render": {"viewport": ("viewport", REQUIRED), "resolution": ("grid", [512, 512]),
               "R": ("posfloat", REQUIRED), "depth": ("posint", 6), "P_max": ("nonneg", 8)},
    "julia": {"viewport": ("viewport", REQUIRED), "resolution": ("grid", [512, 512]),
              "R": ("posfloat", REQUIRED), "depth": ("posint", 6), "P_max": ("nonneg", 8)},
    "pits": {"D": ("mu", 4.0), "count": ("posint", 8), "r": ("posfloat", 1.0),
             "C": ("optposfloat", None), "grid": ("grid", [32, 256])},
    "oracle-check": {"grid": ("posint", 64), "radius": ("posfloat", 2.0),
                     "tolerance": ("posfloat", 1e-9)},
}
# commands that fit a linearizer and therefore need a repelling fixed point
_NEEDS_HANDLE = {"linearize", "residuals", "growth", "order", "bracket", "radii", "continuum",
                 "web", "render", "julia", "pits"}


class ConfigError(ValueError):
    """Invalid run config; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass
class RunConfig:
    command: str
    map_spec: Optional[Union[PolynomialMap, QRPowerMap]] = None
    fixed_point_selector: Union[str, int, complex] = "auto-repelling"
    scale: Union[str, int, complex] = "multiplier"
    params: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self) -> dict:
        """All keys, defaults included; ``parse_config`` of this gives back ``self``."""
        out: dict[str, Any] = {"command": self.command}
        if self.map_spec is not None:
            if isinstance(self.map_spec, QRPowerMap):
                out["map"] = {"qr": {"stretch": self.map_spec.stretch, "power": self.map_spec.power}}
            else:
                out["map"] = self.map_spec.to_pairs()
            out["fixed_point"] = _complex_to_json(self.fixed_point_selector)
            out["scale"] = _complex_to_json(self.scale)
        out["seed"] = self.seed
        out.update(self.params)
        return out


def serialize(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_json(), indent=2, sort_keys=True)


def _complex_to_json(v):
    return [v.real, v.imag] if isinstance(v, complex) else v


# ---------------------------------------------------------------- parsing


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _complex_pair(key: str, v, where: str = "") -> complex:
    if not (isinstance(v, list) and len(v) == 2 and all(_is_number(x) for x in v)):
        raise ConfigError(key, f"malformed complex pair{where}: expected [re, im], got {v!r}")
    return complex(float(v[0]), float(v[1]))


def _check_param(key: str, kind: str, v):
    def bad(what):
        raise ConfigError(key, f"expected {what}, got {v!r}")

    if kind == "float":
        return float(v) if _is_number(v) else bad("a number")
    if kind == "posfloat":
        return float(v) if _is_number(v) and v > 0 else bad("a positive number")
    if kind == "float1":
        return float(v) if _is_number(v) and v >= 1 else bad("a number >= 1")
    if kind == "mu":
        return float(v) if _is_number(v) and v > 1 else bad("a number > 1")
    if kind == "optfloat1":
        return None if v is None else _check_param(key, "float1", v)
    if kind == "optposfloat":
        return None if v is None else _check_param(key, "posfloat", v)
    if kind == "posint":
        return v if _is_int(v) and v > 0 else bad("a positive integer")
    if kind == "nonneg":
        return v if _is_int(v) and v >= 0 else bad("a non-negative integer")
    if kind == "optint":
        return v if v is None or (_is_int(v) and v >= 2) else bad("null or an integer >= 2")
    if kind == "period":
        return v if _is_int(v) and 1 <= v <= 4 else bad("an integer in 1..4")
    if kind == "bool":
        return v if isinstance(v, bool) else bad("true or false")
    if kind == "grid":
        if isinstance(v, list) and len(v) == 2 and all(_is_int(x) and x > 0 for x in v):
            return list(v)
        return bad("[rows, cols] of positive integers")
    if kind == "window":
        if isinstance(v, list) and len(v) == 2 and all(_is_number(x) for x in v) and v[0] < v[1]:
            return [float(x) for x in v]
        return bad("[low, high] with low < high")
    if kind == "viewport":
        if isinstance(v, list) and len(v) == 4 and all(_is_number(x) for x in v) \
                and v[0] < v[1] and v[2] < v[3]:
            return [float(x) for x in v]
        return bad("[xmin, xmax, ymin, ymax] with positive extent")
    if kind == "pairs":
        if not isinstance(v, list) or not v:
            return bad("a non-empty list of [re, im] pairs")
        return [[z.real, z.imag] for z in
                (_complex_pair(key, x, f" at index {i}") for i, x in enumerate(v))]
    raise AssertionError(kind)


def _parse_map(command: str, v):
    if isinstance(v, dict):
        if command != "holder":
            raise ConfigError("map", "a quasiregular power map is only accepted by 'holder'")
        if set(v) != {"qr"} or not isinstance(v["qr"], dict) \
                or set(v["qr"]) != {"stretch", "power"}:
            raise ConfigError("map", 'expected {"qr": {"stretch": K, "power": d}}')
        s, d = v["qr"]["stretch"], v["qr"]["power"]
        if not (_is_number(s) and s >= 1 and _is_int(d) and d >= 2):
            raise ConfigError("map", "qr map needs stretch >= 1 and integer power >= 2")
        return QRPowerMap(float(s), int(d))
    if not isinstance(v, list) or not v:
        raise ConfigError("map", "expected a list of [re, im] coefficient pairs, constant first")
    coeffs = [_complex_pair("map", x, f" at index {i}") for i, x in enumerate(v)]
    try:
        return PolynomialMap(coeffs)
    except ValueError as exc:
        raise ConfigError("map", str(exc)) from None


def _parse_selector(v):
    if v == "auto-repelling":
        return v
    if _is_int(v):
        return v
    if isinstance(v, list):
        return _complex_pair("fixed_point", v)
    raise ConfigError("fixed_point", f"expected \"auto-repelling\", an index or [re, im], got {v!r}")


def _parse_scale(v):
    if v in ("multiplier", "two"):
        return v
    if _is_int(v) and v >= 1:
        return v
    if isinstance(v, list):
        s = _complex_pair("scale", v)
        if abs(s) <= 1:
            raise ConfigError("scale", "a complex scale needs modulus > 1")
        return s
    raise ConfigError("scale", f"expected \"multiplier\", \"two\", a positive int or [re, im], got {v!r}")


def parse_config(text: Union[str, bytes, dict]) -> RunConfig:
    """Validate a JSON run config and fill in defaults."""
    if isinstance(text, dict):
        doc = text
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be a JSON object")
    if "command" not in doc:
        raise ConfigError("command", "missing required key")
    command = doc["command"]
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    schema = _PARAMS[command]
    with_map = command != "oracle-check"
    allowed = {"command", "seed"} | set(schema)
    if with_map:
        allowed |= {"map", "fixed_point", "scale"}
    for key in sorted(doc):
        if key not in allowed:
            raise ConfigError(key, f"unknown key for command '{command}'")
    seed = doc.get("seed", 0)
    if not (_is_int(seed) and seed >= 0):
        raise ConfigError("seed", f"expected a non-negative integer, got {seed!r}")
    cfg = RunConfig(command, seed=seed)
    if with_map:
        if "map" not in doc:
            raise ConfigError("map", "missing required key")
        cfg.map_spec = _parse_map(command, doc["map"])
        cfg.fixed_point_selector = _parse_selector(doc.get("fixed_point", "auto-repelling"))
        cfg.scale = _parse_scale(doc.get("scale", "multiplier"))
        if isinstance(cfg.map_spec, PolynomialMap) and \
                (command in _NEEDS_HANDLE or "fixed_point" in doc):
            try:
                select_fixed_point(cfg.map_spec, cfg.fixed_point_selector)
            except ValueError as exc:
                raise ConfigError("fixed_point", str(exc)) from None
    for key, (kind, default) in schema.items():
        if key in doc:
            cfg.params[key] = _check_param(key, kind, doc[key])
        elif default is REQUIRED:
            raise ConfigError(key, "missing required key")
        else:
            cfg.params[key] = default
    return cfg


# ---------------------------------------------------------------- artifacts


def atomic_write(path: str, data: bytes) -> None:
    """Write through a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return format(float(x), f".{CSV_DIGITS}g")


def emit_csv(series: list[GrowthRecord], path: str) -> None:
    """One row per record: ``log_r, tower_height, log_M_residual, samples``.

    ``log M(r)`` is ``exp^tower_height(log_M_residual)``.
    """
    if not series:
        raise ValueError("empty growth series")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["log_r", "tower_height", "log_M_residual", "samples"])
    for rec in series:
        w.writerow([_fmt(rec.log_r), int(rec.logM.height), _fmt(rec.logM.residual), int(rec.samples)])
    atomic_write(path, buf.getvalue().encode())


def emit_points_csv(points: list[dict], path: str) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["k", "re", "im", "log_modulus", "log_L_modulus"]
    w.writerow(cols)
    for p in points:
        w.writerow([int(p["k"])] + [_fmt(p[c]) for c in cols[1:]])
    atomic_write(path, buf.getvalue().encode())


def _write_json(path: str, obj) -> None:
    atomic_write(path, (json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n").encode())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _versions() -> dict:
    out = {"python": platform.python_version()}
    # the package ships in the "artifact" distribution
    for label, dist in (("linlab", "artifact"), ("numpy", "numpy"), ("scipy", "scipy"),
                        ("scikit-learn", "scikit-learn")):
        try:
            out[label] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[label] = None
    return out


# ---------------------------------------------------------------- commands


def _handle(cfg: RunConfig) -> PoincareLinearizer:
    return PoincareLinearizer(fixed_point=cfg.fixed_point_selector, scale=cfg.scale).fit(cfg.map_spec)


def _fp_json(f) -> dict:
    return {"point": f.point, "multiplier": f.multiplier, "classification": f.classification}


def _cmd_fixpoints(cfg, out):
    return "success", {"fixed_points": [_fp_json(f) for f in find_fixed_points(cfg.map_spec)]}, {}


def _cmd_periodic(cfg, out):
    p, tol = cfg.map_spec, cfg.params["tolerance"]
    rows, ok = [], True
    for n in range(1, cfg.params["max_period"] + 1):
        for z, period, mult, cls in periodic_points(p, n):
            res = abs(complex(p.iterate(z, n)) - z)
            ok &= cls == "repelling" and res <= tol
            rows.append({"period": period, "point": z, "multiplier": mult,
                         "classification": cls, "residual": res})
    return ("pass" if ok else "fail"), {"periodic_points": rows}, {"residual_tolerance": tol}


def _cmd_linearize(cfg, out):
    h = _handle(cfg)
    values = []
    for re, im in cfg.params["points"]:
        ev = eval_large(h, complex(re, im))
        row = {"z": [re, im], "log_modulus": [ev.modulus.height, ev.modulus.residual],
               "phase_reliable": ev.phase_reliable, "log_truncation": ev.log_trunc}
        if ev.value is not None and hasattr(ev.value, "log_mod") and ev.value.log_mod < 700:
            row["value"] = complex(ev.value.to_complex())
        values.append(row)
    return "success", {"handle": h.to_dict(), "values": values}, {}


def _cmd_residuals(cfg, out):
    h = _handle(cfg)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.params["n_points"]
    z = h.base_radius_ * np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
    worst = float(np.max(residual(h, z)))
    tol = cfg.params["tolerance"]
    return ("pass" if worst <= tol else "fail"), \
        {"handle": h.to_dict(), "max_residual": worst, "n_points": n}, {"residual_tolerance": tol}


def _cmd_growth(cfg, out):
    h = _handle(cfg)
    q = cfg.params
    series = growth_series(h, np.linspace(q["log_r_min"], q["log_r_max"], q["samples"]))
    path = os.path.join(out, "growth.csv")
    emit_csv(series, path)
    return "success", {"handle": h.to_dict(), "records": len(series)}, {}, [path]


def _cmd_order(cfg, out):
    h = _handle(cfg)
    q = cfg.params
    est = order_estimate(h, q["log_r_min"], q["log_r_max"], q["samples"])
    rho0 = valiron_order(h)
    ok = abs(est.rho - rho0) <= q["tolerance"] and abs(est.lambda_low - rho0) <= q["tolerance"]
    return ("pass" if ok else "fail"), \
        {"rho": est.rho, "lambda_low": est.lambda_low, "fit_window": est.fit_window,
         "fit_residual": est.residual, "expected_order": rho0}, {"order_tolerance": q["tolerance"]}


def _cmd_bracket(cfg, out):
    h = _handle(cfg)
    q = cfg.params
    d = q["d"] if q["d"] is not None else cfg.map_spec.degree
    rep = growth_bracket_check(h, d, q["K"], tuple(q["window"]), q["samples"], q["tolerance"])
    return rep["verdict"], rep, {"bracket_tolerance": q["tolerance"]}


def _cmd_holder(cfg, out):
    q = cfg.params
    fit = holder_bounds_fit(cfg.map_spec, q["j"], tuple(q["radii"]), q["n_radii"], q["n_angles"], q["K"])
    body = {"C1": fit.C1, "C2": fit.C2, "R0": fit.R0, "exponent_low": fit.exponent_low,
            "exponent_high": fit.exponent_high, "passes": list(fit.passes),
            "measured_exponent": fit.measured_exponent}
    return ("pass" if fit.ok else "fail"), body, {}


def _cmd_radii(cfg, out):
    h = _handle(cfg)
    q = cfg.params
    rep = radii_sequence(h, q["R"], q["N"], q["mu"], q["base"])
    body = rep.to_json()
    ok = all(rep.verdicts[q["from_n"]:])
    body["verdict"] = "pass" if ok else "fail"
    return body["verdict"], body, {"mu": q["mu"], "from_n": q["from_n"]}


def _cmd_continuum(cfg, out):
    h = _handle(cfg)
    q = cfg.params
    res = min_modulus_continuum(h, q["log_r"], q["mu"], tuple(q["grid"]), K=q["K"],
                                maximize=q["maximize"], cross_check=q["cross_check"])
    return res.verdict, res.to_json(), {"mu": q["mu"], "grid": q["grid"]}


def _cmd_web(cfg, out):
    from .websets import spiders_web_verify
    h = _handle(cfg)
    q = cfg.params
    rep = spiders_web_verify(h, q["R"], q["mu"], q["N"], tuple(q["grid"]), q["K"])
    return rep.verdict, rep.to_json(), {"mu": q["mu"], "grid": q["grid"]}


def _render(cfg):
    from .websets import render_fast_escaping, worker_count
    h = _handle(cfg)
    q = cfg.params
    return render_fast_escaping(h, tuple(q["viewport"]), tuple(q["resolution"]), q["R"], q["depth"],
                                q["P_max"], workers=worker_count())


def _grid_summary(grid) -> dict:
    codes, counts = np.unique(grid.codes, return_counts=True)
    from .websets import code_name
    return {"counts": {code_name(int(c)): int(n) for c, n in zip(codes, counts)}}


def _cmd_render(cfg, out):
    from .websets import write_ppm
    grid = _render(cfg)
    path = os.path.join(out, "render.ppm")
    write_ppm(grid, path)
    return "success", _grid_summary(grid), {}, [path, os.path.join(out, "render.palette.json")]


def _cmd_julia(cfg, out):
    from .websets import julia_boundary_render, write_ppm
    grid = julia_boundary_render(_render(cfg))
    path = os.path.join(out, "julia.ppm")
    write_ppm(grid, path)
    return "success", _grid_summary(grid), {}, [path, os.path.join(out, "julia.palette.json")]


def _cmd_pits(cfg, out):
    from .websets import pits_effect_witness
    h = _handle(cfg)
    q = cfg.params
    rep = pits_effect_witness(h, q["D"], q["count"], q["r"], tuple(q["grid"]), cfg.seed, q["C"])
    artifacts = []
    if rep.points:
        path = os.path.join(out, "pits_points.csv")
        emit_points_csv(rep.points, path)
        artifacts.append(path)
    return rep.verdict, rep.to_json(), {"C": rep.C, "ratio_bound": q["D"] ** 2}, artifacts


def oracle_errors(grid: int = 64, radius: float = 2.0) -> dict:
    """Max relative error of the fitted linearizer against each closed form on a disc grid."""
    xs = np.linspace(-radius, radius, grid)
    Z = (xs[None, :] + 1j * xs[:, None]).ravel()
    Z = Z[np.abs(Z) <= radius]
    out = {}
    for o in (OracleLinearizer.exp_for_power_map(2), OracleLinearizer.cosh_for_chebyshev()):
        h = PoincareLinearizer(fixed_point=o.fixed_point.point).fit(o.base_map)
        ref = oracle_eval(o, Z)
        out[o.kind] = float(np.max(np.abs(h.predict(Z) - ref) / np.abs(ref)))
    return out


def _cmd_oracle(cfg, out):
    q = cfg.params
    errs = oracle_errors(q["grid"], q["radius"])
    ok = all(e <= q["tolerance"] for e in errs.values())
    return ("pass" if ok else "fail"), {"max_relative_error": errs, "points_per_side": q["grid"]}, \
        {"relative_error_tolerance": q["tolerance"]}


_DISPATCH = {
    "fixpoints": _cmd_fixpoints, "periodic": _cmd_periodic, "linearize": _cmd_linearize,
    "residuals": _cmd_residuals, "growth": _cmd_growth, "order": _cmd_order,
    "bracket": _cmd_bracket, "holder": _cmd_holder, "radii": _cmd_radii,
    "continuum": _cmd_continuum, "web": _cmd_web, "render": _cmd_render, "julia": _cmd_julia,
    "pits": _cmd_pits, "oracle-check": _cmd_oracle,
}


def exit_code(verdict: str) -> int:
    if verdict in ("pass", "success"):
        return EXIT_OK
    if verdict == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_FAIL


def dispatch(cfg: RunConfig, out: str = ".") -> int:
    """Run ``cfg`` and write ``<command>.json`` plus ``manifest.json`` under ``out``."""
    start = time.perf_counter()
    from .websets import worker_count
    manifest = {"command": cfg.command, "config": cfg.to_json(), "versions": _versions(),
                "threads": worker_count()}
    code, artifacts = EXIT_FAIL, []
    try:
        result = _DISPATCH[cfg.command](cfg, out)
        verdict, body, thresholds = result[:3]
        artifacts = list(result[3]) if len(result) > 3 else []
        report_path = os.path.join(out, f"{cfg.command}.json")
        _write_json(report_path, {"command": cfg.command, "config": cfg.to_json(),
                                  "verdict": verdict, "result": body})
        artifacts.append(report_path)
        manifest.update(verdict=verdict, thresholds=thresholds)
        code = exit_code(verdict)
    except Exception as exc:  # every failure still leaves a manifest
        manifest.update(verdict="error", error=f"{type(exc).__name__}: {exc}")
        print(f"linlab {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_FAIL
    manifest["timings"] = {"total_s": time.perf_counter() - start}
    manifest["artifacts"] = [os.path.basename(a) for a in artifacts]
    manifest["exit_code"] = code
    try:
        _write_json(os.path.join(out, "manifest.json"), manifest)
    except OSError as exc:
        print(f"linlab {cfg.command}: cannot write manifest: {exc}", file=sys.stderr)
        code = EXIT_FAIL
    return code


def main(argv: Optional[list] = None) -> int:
    ap = argparse.ArgumentParser(prog="linlab", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run config")
    ap.add_argument("--out", default=".", help="output directory (default: current)")
    args = ap.parse_args(argv)
    try:
        with open(args.config, "rb") as fh:
            doc = json.loads(fh.read())
        if isinstance(doc, dict):
            doc.setdefault("command", args.command)
            if doc["command"] != args.command:
                raise ConfigError("command", f"config says {doc['command']!r} but "
                                             f"subcommand is {args.command!r}")
        cfg = parse_config(doc)
    except (OSError, ValueError) as exc:
        print(f"linlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return dispatch(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
