"""Command-line front end: config-driven runs with reproducible artifacts.

Every invocation executes one action and writes its artifacts plus a
``manifest.json`` into the output directory:

    solve      field.cfld, solve_report.json
    continue   branch.csv, branch_summary.json, final_field.cfld
    kappa      kappa.json
    farfield   field.cfld, radiation.csv, farfield.csv
    verify     verify_<mode>.json   (modes sturm, fourier, energy, defocusing)
    constants  constants_zN.json    (also printed to stdout)
    animate    frame_NNNN.csv per time, frames.json index

Configs are JSON with a ``problem`` block {dim, k, L, M, alpha, nonlinearity,
incident} and optional per-action blocks (``solver``, ``continuation``,
``verify``, ``farfield``, ``animate``).  The schema below rejects malformed
input before any numerics run.  Floats in JSON and CSV reports are rounded to
12 significant digits so identical config + seed reproduces byte-identical
reports; field binaries and the manifest (which records wall time) are exempt.

Exit codes: 0 success, 2 config error, 3 solver failed to converge,
4 verification margin breach, 1 unexpected error.  Failures are also
recorded in the manifest.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
import tempfile
import time

import numpy as np
import scipy.fft
from jsonschema import Draft202012Validator

from . import __version__
from .continuation import StepConfig, blowup_probe, continue_branch
from .fields import (
    ComplexField,
    Grid,
    IncidentWave,
    NonlinearitySpec,
    load_field,
    make_incident,
    save_field,
    sphere_quadrature,
    write_slice_csv,
)
from .resolvent import ResolventConfig, estimate_kappa, far_field, radiation_report
from .solver import SolverConfig, picard_solve
from .verify import (
    defocusing_inequalities,
    energy_identity,
    fourier_positivity,
    sturm_check,
    truncation_threshold,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_BREACH = 4

_COEFFICIENT = {
    "type": "object",
    "properties": {
        "type": {"enum": ["zero", "radial_bump", "constant_ball"]},
        "amplitude": {"type": "number"},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "cutoff": {"type": "number", "exclusiveMinimum": 0},
        "radius": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["type"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "problem": {
            "type": "object",
            "properties": {
                "dim": {"type": "integer", "minimum": 1, "maximum": 6},
                "k": {"type": "number", "exclusiveMinimum": 0},
                "L": {"type": "number", "exclusiveMinimum": 0},
                "M": {"type": "integer", "minimum": 4},
                "alpha": {"type": "number"},
                "pad_cells": {"type": "integer", "minimum": 0},
                "nonlinearity": {
                    "type": "object",
                    "properties": {
                        "kind": {"enum": ["zero", "power", "affine"]},
                        "p": {"type": "number"},
                        "coefficient": _COEFFICIENT,
                        "a": _COEFFICIENT,
                        "b": _COEFFICIENT,
                        "tags": {"type": "array", "items": {"type": "string"}},
                    },
                    "required": ["kind"],
                    "additionalProperties": False,
                },
                "incident": {
                    "type": "object",
                    "properties": {
                        "type": {"enum": ["zero", "plane"]},
                        "direction": {"type": "array",
                                      "items": {"type": "number"}},
                        "amplitude": {"type": "number"},
                    },
                    "required": ["type"],
                    "additionalProperties": False,
                },
            },
            "required": ["dim", "k", "L", "M"],
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "max_iters": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "damping": {"type": "number", "exclusiveMinimum": 0,
                            "maximum": 1},
                "adapt_damping": {"type": "boolean"},
                "divergence_cap": {"type": "number", "exclusiveMinimum": 0},
                "compute_radiation": {"type": "boolean"},
                "certify": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "continuation": {
            "type": "object",
            "properties": {
                "lambda_max": {"type": "number", "exclusiveMinimum": 0},
                "initial_step": {"type": "number", "exclusiveMinimum": 0},
                "max_step": {"type": "number", "exclusiveMinimum": 0},
                "growth": {"type": "number", "exclusiveMinimum": 1},
                "grow_after": {"type": "integer", "minimum": 1},
                "floor_factor": {"type": "number", "exclusiveMinimum": 0},
                "max_solves": {"type": "integer", "minimum": 1},
                "store_at": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["lambda_max"],
            "additionalProperties": False,
        },
        "verify": {
            "type": "object",
            "properties": {
                "nu": {"type": "number"},
                "pairs": {"type": "integer", "minimum": 1},
                "delta": {"type": "number", "exclusiveMinimum": 0},
                "freq_count": {"type": "integer", "minimum": 2},
                "radii": {"type": "array",
                          "items": {"type": "number", "exclusiveMinimum": 0}},
                "factor": {"type": "number", "exclusiveMinimum": 0},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "farfield": {
            "type": "object",
            "properties": {
                "radii": {"type": "array",
                          "items": {"type": "number", "exclusiveMinimum": 0}},
                "extraction_radius": {"type": "number", "exclusiveMinimum": 0},
                "directions": {"type": "integer", "minimum": 6},
            },
            "additionalProperties": False,
        },
        "animate": {
            "type": "object",
            "properties": {
                "field": {"type": "string"},
                "k": {"type": "number", "exclusiveMinimum": 0},
                "times": {"type": "array", "items": {"type": "number"},
                          "minItems": 1},
            },
            "required": ["field", "times"],
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_VALIDATOR = Draft202012Validator(CONFIG_SCHEMA)

_NEEDS_PROBLEM = {"solve", "continue", "kappa", "farfield"}


class ConfigError(Exception):
    pass


# -- serialization helpers ----------------------------------------------------

def _round_sig(x: float, digits: int = 12) -> float:
    if x == 0.0 or not math.isfinite(x):
        return float(x)
    return float(f"{x:.{digits}g}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round_sig(float(obj))
    if isinstance(obj, complex):
        return {"re": _round_sig(obj.real), "im": _round_sig(obj.imag)}
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def _atomic_write(path: str, writer):
    """Write through a temp file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.remove(tmp)


def _write_json(path: str, obj):
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    _atomic_write(path, lambda tmp: open(tmp, "w").write(text))


def _write_csv(path: str, header, rows):
    def writer(tmp):
        with open(tmp, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for row in rows:
                wr.writerow([f"{v:.12g}" if isinstance(v, float) else v
                             for v in row])
    _atomic_write(path, writer)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# -- config -> problem objects ------------------------------------------------

def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    errors = sorted(_VALIDATOR.iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        where = "/".join(str(p) for p in errors[0].path) or "<root>"
        raise ConfigError(f"config schema violation at {where}: "
                          f"{errors[0].message}")
    return cfg


def _default_alpha(dim: int) -> float:
    # strictly above the (dim+1)/2 admissibility floor
    return 0.5 * (dim + 3)


def _build_coefficient(grid: Grid, spec: dict) -> ComplexField:
    kind = spec["type"]
    if kind == "zero":
        return ComplexField.zeros(grid)
    r = grid.radius()
    amp = float(spec.get("amplitude", 1.0))
    if kind == "radial_bump":
        width = float(spec.get("width", 4.0))
        cutoff = float(spec.get("cutoff", 0.5 * grid.half_width))
        vals = amp * np.exp(-width * r ** 2) * (r <= cutoff)
    else:  # constant_ball
        radius = float(spec.get("radius", 0.5 * grid.half_width))
        vals = amp * (r <= radius).astype(float)
    return ComplexField(grid, vals.astype(complex))


def _fallback_power(dim: int) -> float:
    if dim < 3:
        return 3.0
    crit = 2.0 * dim / (dim - 2.0)
    return 2.0 + 0.25 * (crit - 2.0)


def _build_nonlinearity(grid: Grid, alpha: float, spec: dict | None) -> NonlinearitySpec:
    spec = spec or {"kind": "zero"}
    kind = spec["kind"]
    tags = tuple(spec.get("tags", ()))
    if kind == "zero":
        # inert power law so continuation stays available
        return NonlinearitySpec.power(ComplexField.zeros(grid),
                                      p=_fallback_power(grid.dim), alpha=alpha)
    if kind == "power":
        if "p" not in spec or "coefficient" not in spec:
            raise ConfigError("power nonlinearity needs 'p' and 'coefficient'")
        Q = _build_coefficient(grid, spec["coefficient"])
        return NonlinearitySpec.power(Q, p=float(spec["p"]), alpha=alpha,
                                      tags=tags)
    if "a" not in spec or "b" not in spec:
        raise ConfigError("affine nonlinearity needs 'a' and 'b'")
    return NonlinearitySpec.affine(_build_coefficient(grid, spec["a"]),
                                   _build_coefficient(grid, spec["b"]),
                                   alpha=alpha, tags=tags)


def _build_incident(grid: Grid, k: float, spec: dict | None) -> ComplexField:
    spec = spec or {"type": "plane"}
    if spec["type"] == "zero":
        return ComplexField.zeros(grid)
    direction = spec.get("direction") or [1.0] + [0.0] * (grid.dim - 1)
    if len(direction) != grid.dim:
        raise ConfigError(f"incident direction needs {grid.dim} components")
    phi = make_incident(IncidentWave.plane(k, direction), grid)
    return phi * float(spec.get("amplitude", 1.0))


@dataclasses.dataclass(frozen=True)
class _Problem:
    k: float
    alpha: float
    rcfg: ResolventConfig
    f: NonlinearitySpec
    phi: ComplexField


def _build_problem(cfg: dict) -> _Problem:
    if "problem" not in cfg:
        raise ConfigError("config needs a 'problem' block for this action")
    pr = cfg["problem"]
    try:
        grid = Grid(dim=pr["dim"], half_width=float(pr["L"]),
                    points_per_axis=pr["M"])
        rcfg = ResolventConfig.padded(grid, pad_cells=pr.get("pad_cells", 0))
        alpha = float(pr.get("alpha", _default_alpha(grid.dim)))
        f = _build_nonlinearity(grid, alpha, pr.get("nonlinearity"))
        phi = _build_incident(rcfg.eval_grid, float(pr["k"]),
                              pr.get("incident"))
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return _Problem(k=float(pr["k"]), alpha=alpha, rcfg=rcfg, f=f, phi=phi)


def _solver_config(cfg: dict, seed: int) -> SolverConfig:
    try:
        return SolverConfig(seed=seed, **cfg.get("solver", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


# -- action runners -----------------------------------------------------------

def _run_solve(cfg: dict, out: str, seed: int):
    prob = _build_problem(cfg)
    scfg = _solver_config(cfg, seed)
    u, rep = picard_solve(prob.f, prob.phi, prob.k, scfg, prob.rcfg)
    field_path = os.path.join(out, "field.cfld")
    _atomic_write(field_path, lambda tmp: save_field(tmp, u, k=prob.k))
    report = rep.as_dict()
    report["sup_norm"] = u.sup_norm
    report["field_file"] = "field.cfld"
    _write_json(os.path.join(out, "solve_report.json"), report)
    code = EXIT_OK if rep.converged else EXIT_DIVERGED
    return code, ["field.cfld", "solve_report.json"], {"solver_tol": scfg.tol}


def _run_continue(cfg: dict, out: str, seed: int):
    if "continuation" not in cfg:
        raise ConfigError("config needs a 'continuation' block")
    cc = dict(cfg["continuation"])
    lam_max = float(cc.pop("lambda_max"))
    store_at = tuple(cc.pop("store_at", ()))
    prob = _build_problem(cfg)
    scfg = _solver_config(cfg, seed)
    try:
        stepcfg = StepConfig(**cc)
        branch = continue_branch(prob.f, prob.phi, prob.k, lam_max, scfg,
                                 prob.rcfg, stepcfg=stepcfg, store_at=store_at)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    rows = [(p.lam, p.sup_norm, p.residual, p.status) for p in branch.points]
    _write_csv(os.path.join(out, "branch.csv"),
               ("lambda", "sup_norm", "residual", "status"), rows)
    summary = {
        "lambda_max": branch.lambda_max,
        "terminated_reason": branch.terminated_reason,
        "n_points": len(branch.points),
        "last_lambda": branch.points[-1].lam,
        "last_sup_norm": branch.points[-1].sup_norm,
    }
    if branch.terminated_reason != "reached_lambda_max":
        try:
            summary["blowup"] = dataclasses.asdict(blowup_probe(branch))
        except ValueError as e:
            summary["blowup"] = {"detected": False, "message": str(e)}
    files = ["branch.csv", "branch_summary.json"]
    if branch.final_field is not None:
        path = os.path.join(out, "final_field.cfld")
        _atomic_write(path, lambda tmp: save_field(tmp, branch.final_field,
                                                   k=prob.k))
        summary["final_field_file"] = "final_field.cfld"
        files.append("final_field.cfld")
    _write_json(os.path.join(out, "branch_summary.json"), summary)
    code = EXIT_OK if branch.terminated_reason == "reached_lambda_max" else EXIT_DIVERGED
    return code, files, {"solver_tol": scfg.tol}


def _run_kappa(cfg: dict, out: str, seed: int):
    prob = _build_problem(cfg)
    est = estimate_kappa(prob.alpha, prob.rcfg, prob.k)
    _write_json(os.path.join(out, "kappa.json"), {
        "alpha": est.alpha,
        "tau_alpha": est.tau_alpha,
        "kappa_hat": est.kappa_hat,
        "truncation_tail_bound": est.truncation_tail_bound,
        "grid": {"dim": est.grid.dim, "L": est.grid.half_width,
                 "M": est.grid.points_per_axis},
    })
    return EXIT_OK, ["kappa.json"], {}


def _run_farfield(cfg: dict, out: str, seed: int):
    prob = _build_problem(cfg)
    scfg = _solver_config(cfg, seed)
    u, rep = picard_solve(prob.f, prob.phi, prob.k, scfg, prob.rcfg)
    if not rep.converged:
        return EXIT_DIVERGED, [], {"solver_tol": scfg.tol}
    ff_cfg = cfg.get("farfield", {})
    g = prob.rcfg.eval_grid
    u_sc = u - prob.phi
    radii = tuple(ff_cfg.get("radii",
                             (g.half_width / 4, g.half_width / 2,
                              3 * g.half_width / 4)))
    rad = radiation_report(u_sc, prob.k, radii)
    _write_csv(os.path.join(out, "radiation.csv"),
               ("radius", "averaged_residual", "pointwise_residual"),
               list(zip(rad.radii, rad.averaged_residual,
                        rad.pointwise_residual)))
    extraction = float(ff_cfg.get("extraction_radius", 3 * g.half_width / 4))
    dirs, _ = sphere_quadrature(g.dim, ff_cfg.get("directions", 26))
    ff = far_field(u_sc, prob.k, dirs, extraction)
    header = tuple(f"d{i + 1}" for i in range(g.dim)) + ("re", "im", "abs")
    rows = [tuple(float(c) for c in d) + (float(a.real), float(a.imag),
                                          float(abs(a)))
            for d, a in zip(ff.directions, ff.amplitude)]
    _write_csv(os.path.join(out, "farfield.csv"), header, rows)
    field_path = os.path.join(out, "field.cfld")
    _atomic_write(field_path, lambda tmp: save_field(tmp, u, k=prob.k))
    return EXIT_OK, ["field.cfld", "radiation.csv", "farfield.csv"], {
        "solver_tol": scfg.tol}


def _run_verify(cfg: dict, out: str, seed: int, mode: str):
    vc = cfg.get("verify", {})
    name = f"verify_{mode}.json"
    path = os.path.join(out, name)

    if mode == "sturm":
        tol = float(vc.get("tolerance", 1e-9))
        try:
            results = sturm_check(float(vc.get("nu", 0.5)),
                                  int(vc.get("pairs", 5)))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        margins = [r.margin for r in results]
        breach = any(m < -tol for m in margins)
        _write_json(path, {
            "mode": mode, "nu": vc.get("nu", 0.5), "tolerance": tol,
            "margins": margins, "min_margin": min(margins), "breach": breach,
        })
        return (EXIT_BREACH if breach else EXIT_OK), [name], {"margin_tol": tol}

    if mode == "fourier":
        if "problem" not in cfg:
            raise ConfigError("verify fourier draws dim and k from 'problem'")
        pr = cfg["problem"]
        tol = float(vc.get("tolerance", 1e-8))
        try:
            res = fourier_positivity(pr["dim"], k=float(pr["k"]),
                                     delta=vc.get("delta"), tolerance=tol)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        breach = not res.nonnegative
        _write_json(path, {
            "mode": mode, "dim": res.dim, "k": res.k, "delta": res.delta,
            "threshold_delta": truncation_threshold(res.dim) / res.k,
            "min_value": res.min_value, "tolerance": res.tolerance,
            "breach": breach,
        })
        return (EXIT_BREACH if breach else EXIT_OK), [name], {"value_tol": tol}

    # the remaining modes check an actual solve
    prob = _build_problem(cfg)
    scfg = _solver_config(cfg, seed)
    u, rep = picard_solve(prob.f, prob.phi, prob.k, scfg, prob.rcfg)
    if not rep.converged:
        return EXIT_DIVERGED, [], {"solver_tol": scfg.tol}

    if mode == "energy":
        g = prob.rcfg.eval_grid
        radii = tuple(vc.get("radii", (g.half_width / 4, g.half_width / 2,
                                       3 * g.half_width / 4)))
        factor = float(vc.get("factor", 10.0))
        res = energy_identity(u, prob.k, Q=prob.f.Q, p=prob.f.p, radii=radii)
        breach = not res.within(factor)
        _write_json(path, {
            "mode": mode, "radii": res.radii, "flux_imag": res.flux_imag,
            "quad_tol": res.quad_tol, "factor": factor, "breach": breach,
            "context": res.context,
        })
        return (EXIT_BREACH if breach else EXIT_OK), [name], {"factor": factor}

    # defocusing
    if prob.f.kind != "power":
        raise ConfigError("verify defocusing needs a power nonlinearity")
    tol = float(vc.get("tolerance", 1e-10))
    try:
        checks = defocusing_inequalities(u, prob.phi, prob.f.Q, prob.f.p,
                                         k=prob.k, tolerance=tol)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    breach = not all(c.satisfied for c in checks)
    _write_json(path, {
        "mode": mode, "tolerance": tol, "breach": breach,
        "checks": [{"name": c.name, "lhs": c.lhs, "rhs": c.rhs,
                    "margin": c.margin, "satisfied": c.satisfied}
                   for c in checks],
    })
    return (EXIT_BREACH if breach else EXIT_OK), [name], {"margin_tol": tol}


def _run_constants(dim: int, out: str):
    if dim < 3:
        raise ConfigError("threshold constants are defined for dim >= 3")
    payload = {"dim": dim, "nu": (dim - 2) / 2.0,
               "z": truncation_threshold(dim)}
    # full precision here: the value is a mathematical constant, not a report
    text = json.dumps(payload, sort_keys=True)
    print(text)
    _atomic_write(os.path.join(out, "constants_zN.json"),
                  lambda tmp: open(tmp, "w").write(text + "\n"))
    return EXIT_OK, ["constants_zN.json"], {}


def reconstruct_time_field(field_path: str, times, out_dir: str,
                           k: float | None = None) -> list[str]:
    """Time frames of the standing solution: psi(t, x) = e^{-ikt} u(x),
    written as one mid-plane CSV slice per time (exact phase factor, no
    interpolation in t)."""
    fld, k_stored = load_field(field_path)
    k_eff = float(k) if k is not None else k_stored
    if k_eff <= 0.0:
        raise ValueError("field file carries no wavenumber; pass k explicitly")
    names = []
    for i, t in enumerate(times):
        # reduce the phase so whole periods reproduce the t = 0 frame exactly
        theta = math.fmod(k_eff * float(t), 2.0 * math.pi)
        psi = fld * complex(np.exp(-1j * theta))
        name = f"frame_{i:04d}.csv"
        _atomic_write(os.path.join(out_dir, name),
                      lambda tmp, psi=psi: write_slice_csv(tmp, psi))
        names.append(name)
    return names


def _run_animate(cfg: dict, out: str):
    if "animate" not in cfg:
        raise ConfigError("config needs an 'animate' block")
    ac = cfg["animate"]
    try:
        names = reconstruct_time_field(ac["field"], ac["times"], out,
                                       k=ac.get("k"))
    except (OSError, ValueError) as e:
        raise ConfigError(str(e)) from e
    _write_json(os.path.join(out, "frames.json"), {
        "source_field": ac["field"], "times": list(ac["times"]),
        "files": names,
    })
    return EXIT_OK, names + ["frames.json"], {}


# -- entry point --------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="helmscat",
        description="Nonlinear Helmholtz scattering: solve, continue, verify.")
    sub = p.add_subparsers(dest="action", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required,
                        help="JSON config file")
        sp.add_argument("--out", default=None,
                        help="output directory (default $HELMSCAT_OUT or .)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None,
                        help="FFT worker count (default $HELMSCAT_THREADS)")

    for name in ("solve", "continue", "kappa", "farfield"):
        common(sub.add_parser(name))
    sp = sub.add_parser("verify")
    sp.add_argument("mode", choices=("sturm", "fourier", "energy",
                                     "defocusing"))
    common(sp)
    sp = sub.add_parser("constants")
    sp.add_argument("what", choices=("zN",))
    sp.add_argument("--dim", type=int, default=3)
    common(sp, config_required=False)
    common(sub.add_parser("animate"))
    return p


def _resolve_out(args) -> str:
    out = args.out or os.environ.get("HELMSCAT_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _resolve_threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("HELMSCAT_THREADS")
    return int(env) if env else None


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out = _resolve_out(args)
    threads = _resolve_threads(args)
    seed = getattr(args, "seed", 0)
    t0 = time.perf_counter()

    cfg = None
    inputs = {}
    status, code, error = "ok", EXIT_OK, None
    files, tolerances = [], {}
    try:
        if args.config is not None:
            cfg = load_config(args.config)
            inputs[os.path.basename(args.config)] = _sha256(args.config)
        elif args.action != "constants":
            raise ConfigError("--config is required")
        workers = (scipy.fft.set_workers(threads) if threads
                   else contextlib.nullcontext())
        with workers:
            if args.action == "solve":
                code, files, tolerances = _run_solve(cfg, out, seed)
            elif args.action == "continue":
                code, files, tolerances = _run_continue(cfg, out, seed)
            elif args.action == "kappa":
                code, files, tolerances = _run_kappa(cfg, out, seed)
            elif args.action == "farfield":
                code, files, tolerances = _run_farfield(cfg, out, seed)
            elif args.action == "verify":
                code, files, tolerances = _run_verify(cfg, out, seed,
                                                      args.mode)
            elif args.action == "constants":
                code, files, tolerances = _run_constants(args.dim, out)
            else:
                code, files, tolerances = _run_animate(cfg, out)
    except ConfigError as e:
        status, code, error = "config_error", EXIT_CONFIG, str(e)
    except Exception as e:  # noqa: BLE001 - everything lands in the manifest
        status, code, error = "error", 1, f"{type(e).__name__}: {e}"
    if code == EXIT_DIVERGED:
        status = "divergence"
    elif code == EXIT_BREACH:
        status = "verification_breach"

    manifest = {
        "action": args.action + (f" {args.mode}" if args.action == "verify"
                                 else ""),
        "version": __version__,
        "seed": seed,
        "threads": threads,
        "status": status,
        "error": error,
        "wall_time_s": round(time.perf_counter() - t0, 6),
        "config": cfg,
        "tolerances": tolerances,
        "inputs": inputs,
        "outputs": {name: _sha256(os.path.join(out, name)) for name in files},
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    if error is not None:
        print(f"helmscat {args.action}: {error}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
