"""Batch front end: simulate, simulate-radial, potential, decompose, verify.

Every command reads one JSON config (schema-validated, unknown keys
rejected), writes a JSON report embedding the resolved config and seed, and
emits CSV tables (plus SVG exponent plots where a fit is produced).  Exit
codes: 0 success, 2 config/validation error, 3 numerical failure (blow-up,
NaN, non-convergent quadrature); failures print a machine-readable JSON
error object to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import __version__
from .decomp import TimeSpaceField, dyadic_blocks, l2_norm_tx, lp_project, \
    modulation_blocks, modulation_project
from .fields import Grid2D, SpectralField, VectorField, load_fields, random_field, save_fields
from .geometry import angular_separation_scan, resonance_geometry_scan
from .inflation import QuadratureError, norm_inflation_experiment
from .model import make_coefficients, quadratic_invariants
from .potential import potential_report
from .reports import canonical_json, write_csv
from .solver import IntegratorConfig, evolve, evolve_radial, preset_state
from .svgplot import svg_line_plot
from .sweeps import bilinear_point, strichartz_ratio, trilinear_target_check
from .sweeps import angular_bilinear_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# -- schemas ------------------------------------------------------------------

_GRID = {
    "type": "object",
    "properties": {"half_width": {"type": "number", "exclusiveMinimum": 0},
                   "points": {"type": "integer", "minimum": 8}},
    "required": ["half_width", "points"],
    "additionalProperties": False,
}
_COEFFS = {
    "type": "object",
    "properties": {"alpha": {"type": "number"}, "beta": {"type": "number"},
                   "gamma": {"type": "number"}},
    "required": ["alpha", "beta", "gamma"],
    "additionalProperties": False,
}
_DATA = {
    "type": "object",
    "properties": {
        "preset": {"enum": ["gaussian", "plane-wave", "annulus"]},
        "amplitude": {"type": "number"},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "mode": {"type": "array", "items": {"type": "integer"},
                 "minItems": 2, "maxItems": 2},
    },
    "required": ["preset", "amplitude"],
    "additionalProperties": False,
}
_INTEGRATOR = {
    "type": "object",
    "properties": {
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "t_end": {"type": "number", "exclusiveMinimum": 0},
        "scheme": {"enum": ["split-step-strang", "exponential-rk4"]},
        "dealias": {"type": "boolean"},
        "radial_reproject": {"type": "boolean"},
        "store_every": {"type": "integer", "minimum": 0},
        "hs_diagnostic": {"type": "number"},
        "radial_tol": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["dt", "t_end"],
    "additionalProperties": False,
}

SCHEMAS = {
    "simulate": {
        "type": "object",
        "properties": {"grid": _GRID, "coefficients": _COEFFS, "data": _DATA,
                       "integrator": _INTEGRATOR, "snapshots": {"type": "boolean"}},
        "required": ["grid", "coefficients", "data", "integrator"],
        "additionalProperties": False,
    },
    "potential": {
        "type": "object",
        "properties": {
            "field_file": {"type": "string"},
            "tolerance": {"type": "number", "exclusiveMinimum": 0},
            "s": {"type": "number"},
        },
        "required": ["field_file", "tolerance"],
        "additionalProperties": False,
    },
    "decompose": {
        "type": "object",
        "properties": {
            "grid": _GRID,
            "time_window": {"type": "number", "exclusiveMinimum": 0},
            "time_samples": {"type": "integer", "minimum": 8},
            "sigma": {"type": "number"},
            "band": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["grid", "time_window", "time_samples", "sigma"],
        "additionalProperties": False,
    },
    "verify-strichartz": {
        "type": "object",
        "properties": {
            "sigma": {"type": "number"},
            "pair": {"type": "array", "items": {"type": "number"},
                     "minItems": 2, "maxItems": 2},
            "n_samples": {"type": "integer", "minimum": 1},
            "grid": _GRID,
            "time_window": {"type": "number", "exclusiveMinimum": 0},
            "time_samples": {"type": "integer", "minimum": 8},
        },
        "required": ["sigma", "pair", "n_samples"],
        "additionalProperties": False,
    },
    "verify-bilinear": {
        "type": "object",
        "properties": {
            "sigma1": {"type": "number"},
            "sigma2": {"type": "number"},
            "n_grid": {"type": "array",
                       "items": {"type": "array", "items": {"type": "integer"},
                                 "minItems": 3, "maxItems": 3}},
            "l_grid": {"type": "array",
                       "items": {"type": "array", "items": {"type": "integer"},
                                 "minItems": 2, "maxItems": 2}},
            "trials": {"type": "integer", "minimum": 1},
            "bprime": {"type": "number"},
            "structured": {"type": "boolean"},
            "coherent": {"type": "boolean"},
        },
        "required": ["sigma1", "sigma2", "n_grid", "l_grid", "trials"],
        "additionalProperties": False,
    },
    "verify-geometry": {
        "type": "object",
        "properties": {
            "sigma_sets": {"type": "array",
                           "items": {"type": "array", "items": {"type": "number"},
                                     "minItems": 3, "maxItems": 3}},
            "radius": {"type": "integer", "minimum": 2},
            "eps": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["sigma_sets", "radius", "eps"],
        "additionalProperties": False,
    },
    "verify-angular": {
        "type": "object",
        "properties": {
            "sigmas": {"type": "array", "items": {"type": "number"},
                       "minItems": 3, "maxItems": 3},
            "N": {"type": "integer", "minimum": 64},
            "a_list": {"type": "array", "items": {"type": "integer", "minimum": 64}},
            "n_samples": {"type": "integer", "minimum": 1},
            "bilinear": {"type": "object",
                         "properties": {
                             "sigmas": {"type": "array", "items": {"type": "number"},
                                        "minItems": 3, "maxItems": 3},
                             "N2": {"type": "integer", "minimum": 64},
                             "l_grid": {"type": "array",
                                        "items": {"type": "array",
                                                  "items": {"type": "integer"},
                                                  "minItems": 3, "maxItems": 3}},
                             "trials": {"type": "integer", "minimum": 1}},
                         "required": ["sigmas", "l_grid", "trials"],
                         "additionalProperties": False},
        },
        "required": ["sigmas", "N", "a_list", "n_samples"],
        "additionalProperties": False,
    },
    "verify-trilinear": {
        "type": "object",
        "properties": {
            "sigmas": {"type": "array", "items": {"type": "number"},
                       "minItems": 3, "maxItems": 3},
            "s": {"type": "number"},
            "bprime": {"type": "number"},
            "c": {"type": "number"},
            "n_list": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "l_grid": {"type": "array",
                       "items": {"type": "array", "items": {"type": "integer"},
                                 "minItems": 3, "maxItems": 3}},
            "trials": {"type": "integer", "minimum": 1},
        },
        "required": ["sigmas", "s", "bprime", "c", "n_list", "l_grid", "trials"],
        "additionalProperties": False,
    },
    "verify-inflation": {
        "type": "object",
        "properties": {
            "coefficients": _COEFFS,
            "s": {"type": "number"},
            "n_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
            "t_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
            "agreement_step": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["coefficients", "s", "n_list", "t_list"],
        "additionalProperties": False,
    },
}
SCHEMAS["simulate-radial"] = SCHEMAS["simulate"]


def _validate(kind, config):
    schema = SCHEMAS[kind]
    if jsonschema is None:  # pragma: no cover
        return
    try:
        jsonschema.validate(config, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"config invalid at '{path or '<root>'}': {exc.message}") from exc


# -- command implementations ---------------------------------------------------


def _grid_from(config):
    return Grid2D(config["grid"]["half_width"], config["grid"]["points"])


def _coeffs_from(config):
    c = config["coefficients"]
    return make_coefficients(c["alpha"], c["beta"], c["gamma"])


def _run_simulate(config, out, rng, seed, quiet, radial=False):
    grid = _grid_from(config)
    coeffs = _coeffs_from(config)
    data = config["data"]
    form = "radial" if radial else "cartesian"
    state = preset_state(grid, data["preset"], data["amplitude"], form=form,
                         rng=rng, width=data.get("width", 1.0),
                         mode=tuple(data.get("mode", (2, 1))))
    icfg = IntegratorConfig(**config["integrator"])
    traj = (evolve_radial if radial else evolve)(state, coeffs, icfg)
    rows = list(zip(traj.diagnostics["time"], traj.diagnostics["m1"],
                    traj.diagnostics["m2"], traj.diagnostics["hs"],
                    traj.diagnostics["radial_defect"]))
    write_csv(os.path.join(out, "diagnostics.csv"),
              ["time", "m1", "m2", "hs", "radial_defect"], rows)
    if config.get("snapshots"):
        final = traj.final
        comps = list(final.u.components) + list(final.v.components)
        comps += list(final.w.components) if final.w else [final.W]
        save_fields(os.path.join(out, "final_state.qdf"), comps)
    m1 = traj.diagnostics["m1"]
    m2 = traj.diagnostics["m2"]
    report = {
        "command": "simulate-radial" if radial else "simulate",
        "blowup": traj.blowup,
        "halted_reason": traj.halted_reason,
        "final_time": traj.states[-1].time,
        "invariant_drift": {
            "m1": float(np.max(np.abs(m1 - m1[0])) / max(abs(m1[0]), 1e-300)),
            "m2": float(np.max(np.abs(m2 - m2[0])) / max(abs(m2[0]), 1e-300)),
        },
        "coefficients_regime": coeffs.regime,
        "stability": icfg.stability_note(grid, coeffs),
    }
    if traj.blowup:
        raise NumericalFailure(json.dumps({
            "error": {"type": "numerical", "message": traj.halted_reason,
                      "last_snapshot_time": traj.states[-1].time,
                      "report": report}}))
    return report


def _run_potential(config, out, rng, seed, quiet):
    fields = load_fields(config["field_file"])
    if len(fields) != 2:
        raise ConfigError(f"potential expects a 2-component field file, "
                          f"got {len(fields)} components")
    w = VectorField(tuple(fields))
    report, rep = potential_report(w, config["tolerance"], s=config.get("s", 1.0))
    if rep is not None:
        save_fields(os.path.join(out, "potential.qdf"), [rep.W])
    return {"command": "potential", **report}


def _run_decompose(config, out, rng, seed, quiet):
    grid = _grid_from(config)
    tsf = TimeSpaceField.from_random(grid, config["time_window"],
                                     config["time_samples"], rng,
                                     band=config.get("band"))
    sigma = config["sigma"]
    rows = []
    for N in dyadic_blocks(grid.bandwidth_index() * grid.frequency_step + 1):
        pn = lp_project(tsf, N)
        for L in modulation_blocks(tsf, sigma):
            val = l2_norm_tx(modulation_project(pn, sigma, L))
            if val > 0:
                rows.append((N, L, val))
    write_csv(os.path.join(out, "block_norms.csv"), ["N", "L", "value"], rows)
    return {"command": "decompose", "sigma": sigma, "rows": len(rows),
            "total_l2": l2_norm_tx(tsf)}


def _run_verify_strichartz(config, out, rng, seed, quiet, jobs):
    kw = {}
    if "grid" in config:
        kw["grid"] = _grid_from(config)
    if "time_window" in config:
        kw["time_window"] = config["time_window"]
    if "time_samples" in config:
        kw["n_t"] = config["time_samples"]
    rep = strichartz_ratio(config["sigma"], tuple(config["pair"]),
                           config["n_samples"], rng, seed=seed, **kw)
    write_csv(os.path.join(out, "strichartz_ratios.csv"), ["band", "ratio"],
              rep.extra["free_ratios_by_band"])
    return {"command": "verify-strichartz", "report": rep.to_dict()}


def _run_verify_bilinear(config, out, rng, seed, quiet, jobs):
    s1, s2 = config["sigma1"], config["sigma2"]
    if s1 + s2 == 0:
        raise ConfigError("sigma1 + sigma2 must be nonzero")
    points = [(tuple(ns), tuple(ls)) for ns in config["n_grid"]
              for ls in config["l_grid"]]
    trials = config["trials"]
    bprime = config.get("bprime", 0.4)
    structured = config.get("structured", True)
    coherent = config.get("coherent", False)
    seeds = rng.integers(0, 2**63 - 1, len(points))

    def job(idx):
        (N1, N2, N3), (L1, L2) = points[idx]
        local = np.random.default_rng(seeds[idx])
        pt = bilinear_point(local, s1, s2, N1, N2, N3, L1, L2, trials=trials,
                            bprime=bprime, structured=structured, coherent=coherent)
        return {"N1": N1, "N2": N2, "N3": N3, "L1": L1, "L2": L2, **pt}

    results = _work_queue(job, len(points), jobs)
    rows = [(r["N1"], r["N2"], r["N3"], r["L1"], r["L2"], r["ratio"],
             r["ratio_flat_normalized"], r["ratio_interp_normalized"])
            for r in results]
    write_csv(os.path.join(out, "bilinear_ratios.csv"),
              ["N1", "N2", "N3", "L1", "L2", "ratio", "flat_normalized",
               "interp_normalized"], rows)
    n_maxes = [max(r["N1"], r["N2"], r["N3"]) for r in results]
    fit = None
    if len(set(n_maxes)) >= 4:
        from .reports import loglog_fit

        slope, err, _ = loglog_fit(n_maxes, [r["ratio_flat_normalized"] for r in results])
        fit = {"exponent": slope, "stderr": err}
        svg_line_plot(
            os.path.join(out, "bilinear_fit.svg"),
            [("flat-normalized best ratio", n_maxes,
              [r["ratio_flat_normalized"] for r in results])],
            title="bilinear product estimate", xlabel="N_max",
            ylabel="ratio / RHS", reference_slope=(0.0, n_maxes[0],
                                                   results[0]["ratio_flat_normalized"]),
        )
    return {"command": "verify-bilinear", "points": results, "flat_slope_fit": fit}


def _run_verify_geometry(config, out, rng, seed, quiet, jobs):
    reports = [resonance_geometry_scan(tuple(s), config["radius"], config["eps"])
               for s in config["sigma_sets"]]
    rows = [(str(r["sigmas"]), r["low_modulation_triples"],
             r["min_ratio_low_modulation"], r["reverse_constant"]) for r in reports]
    write_csv(os.path.join(out, "geometry_scan.csv"),
              ["sigmas", "low_modulation_triples", "min_ratio", "reverse_constant"],
              rows)
    return {"command": "verify-geometry", "scans": reports}


def _run_verify_angular(config, out, rng, seed, quiet, jobs):
    rep = angular_separation_scan(tuple(config["sigmas"]), config["N"],
                                  config["a_list"], config["n_samples"], rng,
                                  seed=seed)
    result = {"command": "verify-angular", "separation": rep}
    if "bilinear" in config:
        bl = config["bilinear"]
        reports, fit = angular_bilinear_sweep(
            tuple(bl["sigmas"]), bl.get("N2", config["N"]),
            [tuple(l) for l in bl["l_grid"]], config["a_list"], bl["trials"], rng,
            seed=seed)
        result["bilinear"] = {"points": [r.to_dict() for r in reports],
                              "near_fit": fit.to_dict() if fit else None}
    rows = [(A, r["max_sector_distance"], r["samples"])
            for A, r in rep["by_A"].items()]
    write_csv(os.path.join(out, "angular_scan.csv"),
              ["A", "max_sector_distance", "samples"], rows)
    return result


def _run_verify_trilinear(config, out, rng, seed, quiet, jobs):
    reports = trilinear_target_check(
        tuple(config["sigmas"]), config["s"], config["bprime"], config["c"],
        config["n_list"], [tuple(l) for l in config["l_grid"]],
        config["trials"], rng, seed=seed)
    rows = [(r.parameter_point["N"], r.parameter_point["L1"],
             r.parameter_point["L2"], r.parameter_point["L3"], r.best_ratio,
             r.extra["radial_sector_constant"], r.extra["nonradial_sector_constant"])
            for r in reports]
    write_csv(os.path.join(out, "trilinear_ratios.csv"),
              ["N", "L1", "L2", "L3", "ratio", "radial_sector_constant",
               "nonradial_sector_constant"], rows)
    return {"command": "verify-trilinear", "points": [r.to_dict() for r in reports]}


def _run_verify_inflation(config, out, rng, seed, quiet, jobs):
    coeffs = _coeffs_from(config)
    try:
        rep = norm_inflation_experiment(
            coeffs, config["s"], config["n_list"], config["t_list"],
            agreement_step=config.get("agreement_step"))
    except QuadratureError as exc:
        raise NumericalFailure(json.dumps({
            "error": {"type": "numerical", "message": str(exc)}})) from exc
    rows = [(N, t, rep["norms"][str(float(N))][str(float(t))])
            for N in config["n_list"] for t in config["t_list"]]
    write_csv(os.path.join(out, "inflation_norms.csv"), ["N", "t", "hs_norm"], rows)
    n_list, t_list = config["n_list"], config["t_list"]
    if len(n_list) >= 2 and len(t_list) >= 1:
        t_ref = str(float(max(t_list)))
        series = [(f"t = {t_ref}", n_list,
                   [rep["norms"][str(float(N))][t_ref] for N in n_list])]
        target = rep["targets"]["n_slope"]
        svg_line_plot(os.path.join(out, "inflation_fit.svg"), series,
                      title="second-iterate growth", xlabel="N",
                      ylabel="restricted H^s norm",
                      reference_slope=(target, n_list[0], series[0][2][0]))
    return {"command": "verify-inflation", "report": rep}


VERIFY_COMMANDS = {
    "strichartz": _run_verify_strichartz,
    "bilinear": _run_verify_bilinear,
    "geometry": _run_verify_geometry,
    "angular": _run_verify_angular,
    "trilinear": _run_verify_trilinear,
    "inflation": _run_verify_inflation,
}


def _work_queue(job, count, jobs):
    """Run independent parameter-point jobs; merge deterministically by index."""
    if jobs <= 1 or count <= 1:
        return [job(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(job, range(count)))


# -- entry point ----------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qdnls",
        description="Spectral laboratory for a quadratic-derivative "
                    "Schrodinger three-wave system",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON experiment config")
    common.add_argument("--out", default=None, help="output directory "
                        "(default: $QDNLS_OUT_DIR or '.')")
    common.add_argument("--seed", type=int, default=0, help="RNG seed")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="parallel parameter-point jobs")
    common.add_argument("--quiet", action="store_true")
    for name in ("simulate", "simulate-radial", "potential", "decompose"):
        sub.add_parser(name, parents=[common])
    verify = sub.add_parser("verify", parents=[common])
    verify.add_argument("estimate", choices=sorted(VERIFY_COMMANDS))
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out or os.environ.get("QDNLS_OUT_DIR", ".")
    os.makedirs(out, exist_ok=True)
    kind = args.command if args.command != "verify" else f"verify-{args.estimate}"
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _emit_error("config", str(exc))
        return EXIT_CONFIG
    rng = np.random.default_rng(args.seed)
    started = time.time()
    try:
        _validate(kind, config)
        if kind == "simulate":
            result = _run_simulate(config, out, rng, args.seed, args.quiet)
        elif kind == "simulate-radial":
            result = _run_simulate(config, out, rng, args.seed, args.quiet, radial=True)
        elif kind == "potential":
            result = _run_potential(config, out, rng, args.seed, args.quiet)
        elif kind == "decompose":
            result = _run_decompose(config, out, rng, args.seed, args.quiet)
        else:
            result = VERIFY_COMMANDS[args.estimate](config, out, rng, args.seed,
                                                    args.quiet, args.jobs)
    except (ConfigError, ValueError) as exc:
        _emit_error("validation", str(exc))
        return EXIT_CONFIG
    except NumericalFailure as exc:
        sys.stderr.write(str(exc) + "\n")
        return EXIT_NUMERICAL
    except FloatingPointError as exc:  # pragma: no cover
        _emit_error("numerical", str(exc))
        return EXIT_NUMERICAL
    payload = {
        "tool": "qdnls",
        "version": __version__,
        "command": kind,
        "config": config,
        "seed": args.seed,
        "result": result,
        "timestamp": started,
    }
    report_path = os.path.join(out, f"{kind.replace('-', '_')}_report.json")
    with open(report_path, "w") as fh:
        fh.write(canonical_json(payload))
    if not args.quiet:
        print(f"report written to {report_path}")
    return EXIT_OK


def _emit_error(kind, message):
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")


def main():  # pragma: no cover
    sys.exit(run())
