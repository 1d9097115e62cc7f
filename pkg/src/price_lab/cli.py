"""Command-line batch driver.

    price-lab --config run.json [--scenario NAME] [--out PATH] [--threads N] [--verbose]

Exit codes: 0 success, 2 invalid configuration, 3 numerical violation
(mu >= 1), 4 quadrature non-convergence. Failures print one JSON object on
standard error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import hypergeom, price
from .errors import (DomainError, NonConvergenceError, NumericalViolationError, PreconditionError,
                     PriceLabError)
from .harmonics import function_from_spec
from .mu_engine import growth_profile
from .quadrature import QuadratureSpec
from .spaceform import SpaceForm

log = logging.getLogger("price_lab")

SCHEMA_VERSION = 1
SCENARIOS = ("mu", "almgren", "price-verify", "energy-window", "exponent", "poisson-q", "sweep")
REPORT_SCENARIOS = ("price-verify", "energy-window", "exponent")
PROFILE_COLUMNS = ("R", "sphere_energy", "ball_energy", "dirichlet", "iterated", "mu",
                   "almgren", "lower_env", "upper_env")
Q_COLUMNS = ("R", "Q_closed_form", "Q_quadrature", "rel_diff")
MAX_SWEEP = 10_000

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_NONCONVERGENCE = 0, 2, 3, 4

_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_term = {
    "type": "object",
    "required": ["basis"],
    "properties": {
        "basis": {"enum": ["unit", "coordinate", "product", "difference_of_squares", "axial"]},
        "degree": {"type": "integer", "minimum": 0},
        "index": {"type": "integer", "minimum": 0},
        "indices": {"type": "array", "items": {"type": "integer", "minimum": 0},
                    "minItems": 2, "maxItems": 2},
        "axis": _vector,
        "coefficient": {"type": "number"},
    },
}
FUNCTION_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "polynomial", "poisson"]},
        "value": {"type": "number"},
        "terms": {"type": "array", "items": _term, "minItems": 1},
        "atoms": {"type": "array", "minItems": 1, "items": {
            "type": "object",
            "properties": {"weight": {"type": "number", "exclusiveMinimum": 0},
                           "direction": _vector},
        }},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "polynomial"}}},
         "then": {"required": ["terms"]}},
        {"if": {"properties": {"kind": {"const": "poisson"}}},
         "then": {"required": ["atoms"]}},
    ],
}
QUADRATURE_SCHEMA = {
    "type": "object",
    "properties": {
        "angular_order": {"type": "integer", "minimum": 4},
        "radial_order": {"type": "integer", "minimum": 8},
        "target_rel_tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-2},
        "max_refinements": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}
CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema", "scenario"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "scenario": {"enum": list(SCENARIOS)},
        "space": {
            "type": "object",
            "required": ["dim"],
            "properties": {
                "dim": {"type": "integer", "minimum": 2},
                "k": {"type": "number", "maximum": 0},
                "k_prime": {"type": "number", "maximum": 0},
            },
        },
        "function": FUNCTION_SCHEMA,
        "grid": {
            "type": "object",
            "required": ["start", "stop", "count"],
            "properties": {
                "start": {"type": "number", "exclusiveMinimum": 0},
                "stop": {"type": "number", "exclusiveMinimum": 0},
                "count": {"type": "integer", "minimum": 2},
                "spacing": {"enum": ["linear", "log"]},
            },
        },
        "quadrature": QUADRATURE_SCHEMA,
        "output": {"type": "string"},
        "seed": {"type": "integer"},
        "options": {
            "type": "object",
            "properties": {
                "slack": {"type": "number", "exclusiveMinimum": 1},
                "tail_tol": {"type": "number", "exclusiveMinimum": 0},
                "r0": {"type": "number", "exclusiveMinimum": 0},
                "closed_form": {"type": "boolean"},
            },
        },
        "template": {"type": "object"},
        "parameters": {"type": "object",
                       "additionalProperties": {"type": "array"}},
    },
}


class ConfigError(PriceLabError, ValueError):
    def __init__(self, message: str, path: str = "config"):
        super().__init__(f"{path}: {message}")
        self.path = path


# -- configuration -------------------------------------------------------------


def _path(parts) -> str:
    return "config" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in parts)


def validate(config: dict) -> dict:
    """Schema and semantic validation; raises ConfigError with the offending path."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _path(err.absolute_path))
    scenario = config["scenario"]
    if scenario == "sweep":
        if "template" not in config:
            raise ConfigError("sweep needs a template", "config")
        return config
    for key in ("space", "grid") + (("function",) if scenario != "poisson-q" else ()):
        if key not in config:
            raise ConfigError(f"'{key}' is a required property", "config")
    space = config["space"]
    k = space.get("k", 0.0)
    if space.get("k_prime", k) > k:
        raise ConfigError("k_prime must be <= k", "config.space.k_prime")
    grid = config["grid"]
    if grid["stop"] <= grid["start"]:
        raise ConfigError("stop must exceed start", "config.grid.stop")
    r0 = config.get("options", {}).get("r0", 1.0)
    if scenario == "price-verify" and grid["start"] < r0:
        raise ConfigError(f"envelope grids must start at or after R0={r0}", "config.grid.start")
    if scenario == "poisson-q" and space["dim"] < 3:
        raise ConfigError("poisson-q needs dim >= 3", "config.space.dim")
    return config


def make_grid(grid: dict) -> np.ndarray:
    if grid.get("spacing", "linear") == "log":
        return np.geomspace(grid["start"], grid["stop"], grid["count"])
    return np.linspace(grid["start"], grid["stop"], grid["count"])


def make_spec(config: dict) -> QuadratureSpec:
    return QuadratureSpec(**config.get("quadrature", {}))


def _pad_vectors(fn: dict, n: int) -> dict:
    fn = copy.deepcopy(fn)

    def pad(v, where):
        if len(v) > n:
            raise ConfigError(f"vector has {len(v)} components for dim {n}", where)
        return list(v) + [0.0] * (n - len(v))

    for i, atom in enumerate(fn.get("atoms", [])):
        atom["direction"] = pad(atom.get("direction", [1.0]), f"config.function.atoms[{i}]")
    for i, term in enumerate(fn.get("terms", [])):
        if "axis" in term:
            term["axis"] = pad(term["axis"], f"config.function.terms[{i}]")
    return fn


def make_problem(config: dict):
    s = config["space"]
    space = SpaceForm(s["dim"], s.get("k", 0.0))
    k_prime = s.get("k_prime", space.curvature)
    f = None
    if "function" in config:
        try:
            f = function_from_spec(_pad_vectors(config["function"], space.dim), space)
        except (DomainError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), "config.function") from exc
    return space, k_prime, f


# -- output ----------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_csv(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=True)
        fh.write("\n")


def profile_rows(samples, lower=None, upper=None):
    rows = []
    for i, s in enumerate(samples):
        rows.append([s.R, s.sphere_energy, s.ball_energy, s.dirichlet, s.iterated, s.mu,
                     s.almgren, None if lower is None else lower[i],
                     None if upper is None else upper[i]])
    return rows


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _report_base(config: dict, grid) -> dict:
    return {
        "scenario": config["scenario"],
        "function": config.get("function"),
        "space": config.get("space"),
        "grid": [float(r) for r in grid],
        "C1": None,
        "C2": None,
        "exponent": None,
        "stability_ok": None,
        "tolerances": {},
    }


# -- scenarios ---------------------------------------------------------------------


def run_report(config: dict) -> dict:
    """Run one verification scenario and return its JSON-ready report."""
    scenario = config["scenario"]
    space, k_prime, f = make_problem(config)
    grid = make_grid(config["grid"])
    spec = make_spec(config)
    opts = config.get("options", {})
    report = _report_base(config, grid)
    if scenario == "price-verify":
        r0 = opts.get("r0", 1.0)
        if grid[0] > r0:
            grid = np.concatenate([[r0], grid])
            report["grid"] = [float(r) for r in grid]
        rep = price.verify_double_sided(f, space, grid, spec, k_prime=k_prime,
                                        slack=opts.get("slack", price.DEFAULT_SLACK), r0=r0)
        report.update(rep.to_dict())
        report["tolerances"].update({"target_rel_tol": spec.target_rel_tol})
        report["_profile"] = (rep.samples, rep.lower_env, rep.upper_env)
    elif scenario == "energy-window":
        rep = price.bounded_energy_window_check(
            f, space, grid, spec, tail_tol=opts.get("tail_tol", price.DEFAULT_TAIL_TOL),
            slack=opts.get("slack", price.DEFAULT_SLACK))
        d = rep.to_dict()
        report.update({"C1": rep.min, "C2": rep.max, "stability_ok": rep.stability_ok,
                       "tolerances": {"slack": rep.slack, "tail_tol": rep.tail_tol,
                                      "target_rel_tol": spec.target_rel_tol},
                       "window": d})
    elif scenario == "exponent":
        rep = price.growth_exponent_window(f, space, grid, spec, k_prime=k_prime,
                                           use_closed_form=opts.get("closed_form", True))
        report.update({"exponent": rep.exponent, "stability_ok": rep.ok,
                       "tolerances": {"window_tol": rep.tol},
                       "window": [rep.lower_endpoint, rep.upper_endpoint],
                       "method": rep.method})
    else:
        raise ConfigError(f"{scenario} does not produce a report", "config.scenario")
    return report


def run_profile(config: dict, out: Path) -> None:
    space, _, f = make_problem(config)
    grid = make_grid(config["grid"])
    samples = growth_profile(f, space, grid, make_spec(config), seed=config.get("seed", 0))
    write_csv(out, PROFILE_COLUMNS, profile_rows(samples))


def run_poisson_q(config: dict, out: Path) -> None:
    n = config["space"]["dim"]
    grid = make_grid(config["grid"])
    spec = make_spec(config)
    c1 = hypergeom.calibrate_c1(n)
    form = hypergeom.q_coefficients(n, c1)
    rows = []
    for R in grid:
        closed = hypergeom.q_closed_form(n, R, c1)
        quad, _ = hypergeom.q_quadrature(n, R, -1.0, spec)
        rows.append([R, closed, quad, abs(closed - quad) / abs(quad)])
    write_csv(out, Q_COLUMNS, rows)
    write_json(out.with_suffix(".json"), {"n": n, "c1": c1, "alpha": list(form.alpha),
                                          "anchor_radius": hypergeom.ANCHOR_RADIUS})


def _set_dotted(cfg: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def expand_sweep(config: dict) -> list[dict]:
    params = config.get("parameters", {})
    keys = list(params)
    if not keys or any(len(params[k]) == 0 for k in keys):
        return []
    total = math.prod(len(params[k]) for k in keys)
    if total > MAX_SWEEP:
        raise ConfigError(f"sweep has {total} runs (limit {MAX_SWEEP})", "config.parameters")
    runs = []
    for combo in itertools.product(*(params[k] for k in keys)):
        cfg = copy.deepcopy(config["template"])
        cfg.setdefault("schema", SCHEMA_VERSION)
        for k, v in zip(keys, combo):
            _set_dotted(cfg, k, copy.deepcopy(v))
        runs.append(cfg)
    return runs


def _sweep_entry(cfg: dict) -> dict:
    try:
        validate(cfg)
        if cfg["scenario"] not in REPORT_SCENARIOS:
            raise ConfigError("sweeps run verification scenarios only", "config.scenario")
        report = run_report(cfg)
        report.pop("_profile", None)
        report["status"] = "ok"
        return _clean(report)
    except (PriceLabError, ArithmeticError, ValueError) as exc:
        return _clean({"scenario": cfg.get("scenario"), "function": cfg.get("function"),
                       "space": cfg.get("space"), "status": "error",
                       "error": type(exc).__name__, "message": str(exc)})


def sweep(config: dict, threads: int = 1) -> list[dict]:
    runs = expand_sweep(config)
    if threads <= 1 or len(runs) <= 1:
        return [_sweep_entry(c) for c in runs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_sweep_entry, runs))


def run(config: dict, out: str | None = None, threads: int = 1) -> int:
    """Validate and execute one configuration; returns the exit status."""
    validate(config)
    scenario = config["scenario"]
    out_path = Path(out or config.get("output") or f"{scenario}.out")
    if scenario in ("mu", "almgren"):
        run_profile(config, out_path)
    elif scenario == "poisson-q":
        run_poisson_q(config, out_path)
    elif scenario == "sweep":
        write_json(out_path, sweep(config, threads))
    else:
        report = run_report(config)
        prof = report.pop("_profile", None)
        if prof is not None:
            samples, lower, upper = prof
            write_csv(out_path.with_suffix(".csv"), PROFILE_COLUMNS,
                      profile_rows(samples, lower, upper))
        write_json(out_path, _clean(report))
    log.info("wrote %s", out_path)
    return EXIT_OK


def _fail(code: int, exc: Exception) -> int:
    payload = {"exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["path"] = exc.path
    if isinstance(exc, NonConvergenceError):
        payload["best_estimate"] = exc.value
        payload["err_est"] = exc.err_est
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="price-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--scenario", choices=SCENARIOS, help="override the config scenario")
    parser.add_argument("--out", help="output path (overrides config.output)")
    parser.add_argument("--threads", type=int, default=None, help="sweep worker count")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("PRICE_LAB_THREADS", "1") or 1)
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_CONFIG, ConfigError(str(exc), "config"))
    if not isinstance(config, dict):
        return _fail(EXIT_CONFIG, ConfigError("top level must be an object", "config"))
    if args.scenario:
        config["scenario"] = args.scenario
    try:
        return run(config, args.out, max(1, threads))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except NumericalViolationError as exc:
        return _fail(EXIT_NUMERICAL, exc)
    except NonConvergenceError as exc:
        return _fail(EXIT_NONCONVERGENCE, exc)
    except (DomainError, PreconditionError, PriceLabError) as exc:
        return _fail(EXIT_CONFIG, exc)


if __name__ == "__main__":
    sys.exit(main())
