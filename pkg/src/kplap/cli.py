"""Command-line front end: configure a case, run a mode, emit artifacts.

Four modes:

* ``solve``  — build the analytic potential(s), dump per-side grid CSVs
  plus an energy row;
* ``verify`` — run the duality-gap, equation-residual, second-variation
  and mass-balance checks and emit a pass/fail JSON;
* ``sweep``  — evaluate a list of exponents and emit the convergence
  tables;
* ``oracle`` — minimize the discretized energy directly and compare it
  against the analytic route.

Every mode writes ``<mode>_summary.json`` with the keys config_echo,
results, checks and schema_version, and renders a PNG figure next to
the delimited output (disable with ``--no-figures``).  The exit code is
0 exactly when every enabled check passes.

Configuration is a flat-key JSON file (``--config``), with command-line
flags overriding file values.  Unknown keys are rejected.  Outputs are
deterministic for a fixed config: floats are written with 17 significant
digits, JSON keys are sorted, and random test directions are seeded.
The environment variable ``KPLAP_THREADS`` caps the worker count used
for per-exponent sweep work (and is exported to the BLAS/OpenMP pools).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .direct_minimization import discretize, minimize_energy
from .energies import critical_pair, energy_report
from .errors import ConfigError, DomainError, KplapError
from .figures import (save_oracle_figure, save_potential_figure,
                      save_residual_figure, save_sweep_figure)
from .numerics import QuadratureSpec
from .potential import build_potential, el_residual, grid_table
from .radial_model import (CaseKind, ProblemCase, RadialDensity, check_balance,
                           make_uniform_case, surface_constant)
from .sweep import run_sweep

SCHEMA_VERSION = 1

_KINDS = {
    "disjoint": CaseKind.DISJOINT_BALLS,
    "annulus_outer": CaseKind.ANNULUS_OUTER_SOURCE,
    "annulus_inner": CaseKind.ANNULUS_INNER_SOURCE,
}

_DEFAULTS = {
    "case": "disjoint",
    "n": 2,
    "r1": 1.0,
    "r2": 1.0,
    "density": "uniform",
    "power_exponent": 1.0,
    "p": 4.0,
    "p_values": [3.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
    "grid_size": 4096,
    "nodes": 4097,
    "gap_tol": 1e-6,
    "root_tol": 1e-12,
    "gtol": 1e-10,
    "residual_tol": 1e-6,
    "oracle_tol": 5e-3,
    "cells": 2048,
    "seed": 20210,
    "out_dir": ".",
    "figures": True,
}

_KEY_TYPES = {
    "case": str, "n": int, "r1": float, "r2": float, "density": str,
    "power_exponent": float, "p": float, "p_values": list, "grid_size": int,
    "nodes": int, "gap_tol": float, "root_tol": float, "gtol": float,
    "residual_tol": float, "oracle_tol": float, "cells": int, "seed": int,
    "out_dir": str, "figures": bool, "mode": str,
}


@dataclass(frozen=True)
class RunConfig:
    mode: str
    case: ProblemCase
    p: float
    p_values: tuple[float, ...]
    grid_size: int
    nodes: int
    gap_tol: float
    root_tol: float
    gtol: float
    residual_tol: float
    oracle_tol: float
    cells: int
    seed: int
    out_dir: str
    figures: bool
    echo: dict


def _power_density(exponent: float, support: tuple[float, float],
                   n: int) -> RadialDensity:
    a, b = support
    omega = surface_constant(n)
    k = exponent + n
    if abs(k) < 1e-12:
        coef = 1.0 / (omega * np.log(b / a))
    else:
        coef = k / (omega * (b ** k - a ** k))
    return RadialDensity.power_law(coef, exponent, support)


def build_case(kind_name: str, n: int, r1: float, r2: float,
               density: str, power_exponent: float) -> ProblemCase:
    """Assemble a unit-mass case from flat config values."""
    if kind_name not in _KINDS:
        raise ConfigError(f"unknown case kind {kind_name!r}; "
                          f"expected one of {sorted(_KINDS)}")
    kind = _KINDS[kind_name]
    if density == "uniform":
        return make_uniform_case(kind, n, r1, r2)
    if density != "power":
        raise ConfigError(f"unknown density form {density!r}; "
                          "expected 'uniform' or 'power'")
    if kind is CaseKind.DISJOINT_BALLS:
        supports = {"plus": (0.0, r1), "minus": (0.0, r2)}
    elif kind is CaseKind.ANNULUS_OUTER_SOURCE:
        supports = {"plus": (r2, r1), "minus": (0.0, r2)}
    else:
        supports = {"plus": (0.0, r1), "minus": (r1, r2)}
    fp = _power_density(power_exponent, supports["plus"], n)
    fm = _power_density(power_exponent, supports["minus"], n)
    return ProblemCase(kind=kind, n=n, r1=r1, r2=r2, f_plus=fp, f_minus=fm)


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat-key JSON config file")
    common.add_argument("--case", choices=sorted(_KINDS))
    common.add_argument("--n", type=int)
    common.add_argument("--R1", type=float, dest="r1")
    common.add_argument("--R2", type=float, dest="r2")
    dens = common.add_mutually_exclusive_group()
    dens.add_argument("--uniform", action="store_true",
                      help="uniform unit-mass densities (the default)")
    dens.add_argument("--power", type=float, metavar="EXPONENT",
                      help="power-law densities r**EXPONENT, normalized to unit mass")
    common.add_argument("--p", type=float)
    common.add_argument("--p-values", dest="p_values",
                        help="comma-separated exponent list for sweep")
    common.add_argument("--grid-size", type=int, dest="grid_size")
    common.add_argument("--nodes", type=int, help="quadrature node count")
    common.add_argument("--gap-tol", type=float, dest="gap_tol")
    common.add_argument("--root-tol", type=float, dest="root_tol")
    common.add_argument("--gtol", type=float)
    common.add_argument("--residual-tol", type=float, dest="residual_tol")
    common.add_argument("--oracle-tol", type=float, dest="oracle_tol")
    common.add_argument("--cells", type=int, help="oracle cell count")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering")

    parser = argparse.ArgumentParser(
        prog="kplap",
        description="analytic transfer potentials, their duality checks, "
                    "and a direct-minimization oracle")
    sub = parser.add_subparsers(dest="mode", required=True)
    sub.add_parser("solve", parents=[common],
                   help="build potentials and dump grid tables")
    sub.add_parser("verify", parents=[common],
                   help="run the duality and residual checks")
    sub.add_parser("sweep", parents=[common],
                   help="evaluate a list of exponents")
    sub.add_parser("oracle", parents=[common],
                   help="compare the direct minimizer against the analytic route")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object of flat keys")
    for key, value in data.items():
        if key not in _KEY_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        want = _KEY_TYPES[key]
        if want is float:
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        elif want is int:
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif want is list:
            ok = (isinstance(value, list) and len(value) > 0 and
                  all(isinstance(v, (int, float)) and not isinstance(v, bool)
                      for v in value))
        else:
            ok = isinstance(value, want)
        if not ok:
            raise ConfigError(f"config key {key!r} has wrong type; expected {want.__name__}")
    return data


def _parse_p_values(text: str) -> list[float]:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse exponent list {text!r}") from exc
    if not vals:
        raise ConfigError("exponent list is empty")
    return vals


def parse_config(argv=None) -> RunConfig:
    """Resolve defaults <- config file <- flags into a validated RunConfig."""
    args = _build_parser().parse_args(argv)

    merged = dict(_DEFAULTS)
    if args.config:
        file_values = _load_config_file(args.config)
        file_values.pop("mode", None)  # the subcommand decides the mode
        merged.update(file_values)

    overrides = {}
    for key in ("case", "n", "r1", "r2", "p", "grid_size", "nodes", "gap_tol",
                "root_tol", "gtol", "residual_tol", "oracle_tol", "cells",
                "seed", "out_dir"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.uniform:
        overrides["density"] = "uniform"
    if args.power is not None:
        overrides["density"] = "power"
        overrides["power_exponent"] = args.power
    if args.p_values is not None:
        overrides["p_values"] = _parse_p_values(args.p_values)
    if args.no_figures:
        overrides["figures"] = False
    merged.update(overrides)

    p = float(merged["p"])
    if p <= 2.0:
        raise DomainError(f"exponent must exceed 2, got {p}")
    p_values = tuple(float(v) for v in merged["p_values"])
    if args.mode == "sweep":
        if not p_values:
            raise ConfigError("sweep needs a nonempty exponent list")
        bad = [v for v in p_values if v <= 2.0]
        if bad:
            raise DomainError(f"sweep exponents must exceed 2, got {bad}")
    for key in ("gap_tol", "root_tol", "gtol", "residual_tol", "oracle_tol"):
        if not float(merged[key]) > 0.0:
            raise ConfigError(f"{key} must be positive, got {merged[key]}")
    if int(merged["seed"]) < 0:
        raise ConfigError(f"seed must be >= 0, got {merged['seed']}")

    case = build_case(str(merged["case"]), int(merged["n"]),
                      float(merged["r1"]), float(merged["r2"]),
                      str(merged["density"]), float(merged["power_exponent"]))

    echo = {k: (list(v) if isinstance(v, (list, tuple)) else v)
            for k, v in merged.items()}
    echo["mode"] = args.mode
    echo["p_values"] = [float(v) for v in p_values]

    return RunConfig(
        mode=args.mode, case=case, p=p, p_values=p_values,
        grid_size=int(merged["grid_size"]), nodes=int(merged["nodes"]),
        gap_tol=float(merged["gap_tol"]), root_tol=float(merged["root_tol"]),
        gtol=float(merged["gtol"]), residual_tol=float(merged["residual_tol"]),
        oracle_tol=float(merged["oracle_tol"]), cells=int(merged["cells"]),
        seed=int(merged["seed"]), out_dir=str(merged["out_dir"]),
        figures=bool(merged["figures"]), echo=echo,
    )


# ---------------------------------------------------------------------------
# emission helpers
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2,
                               allow_nan=False) + "\n")


def _thread_cap() -> int:
    raw = os.environ.get("KPLAP_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"KPLAP_THREADS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError(f"KPLAP_THREADS must be >= 1, got {value}")
    return value


# ---------------------------------------------------------------------------
# mode runners: each returns (results, checks, emitted file names)
# ---------------------------------------------------------------------------


def _energy_dict(rep) -> dict:
    return {
        "p": rep.p, "kantorovich": rep.kantorovich, "primal": rep.primal,
        "complementary": rep.complementary, "dual": rep.dual,
        "gap_abs": rep.gap_abs, "gap_rel": rep.gap_rel,
        "second_var_primal_min": rep.second_var_primal_min,
        "second_var_dual_max": rep.second_var_dual_max,
    }


_ENERGY_COLUMNS = ["p", "kantorovich", "primal", "complementary", "dual",
                   "gap_abs", "gap_rel", "second_var_primal_min",
                   "second_var_dual_max"]


def _run_solve(cfg: RunConfig, out: Path):
    quad = QuadratureSpec(nodes=cfg.nodes)
    pairs = critical_pair(cfg.case, cfg.p, grid_size=cfg.grid_size,
                          quad=quad, tol=cfg.root_tol)
    rep = energy_report(cfg.case, cfg.p, grid_size=cfg.grid_size, quad=quad,
                        seed=cfg.seed, pairs=pairs)
    files = []
    sides = {}
    for flux, pot in pairs:
        name = f"potential_{flux.side.value}.csv"
        _write_csv(out / name, ["r", "u", "du", "lambda", "theta_r"],
                   (tuple(float(v) for v in row) for row in grid_table(pot)))
        files.append(name)
        sides[flux.side.value] = {
            "interval": list(pot.interval),
            "constant": float(flux.constant),
            "sup_gradient": pot.sup_gradient,
            "admissible": pot.admissible,
        }
    energy = _energy_dict(rep)
    _write_csv(out / "energy.csv", _ENERGY_COLUMNS,
               [tuple(energy[c] for c in _ENERGY_COLUMNS)])
    files.append("energy.csv")

    balance = check_balance(cfg.case)
    checks = {
        "mass_balanced": bool(balance.normalized),
        "gradient_admissible": all(pot.admissible for _, pot in pairs),
    }
    results = {"p": cfg.p, "energy": energy, "sides": sides,
               "mass_plus": balance.mass_plus, "mass_minus": balance.mass_minus}
    if cfg.figures:
        save_potential_figure(pairs, cfg.case, out / "solve.png", cfg.p)
        files.append("solve.png")
    return results, checks, files


def _run_verify(cfg: RunConfig, out: Path):
    quad = QuadratureSpec(nodes=cfg.nodes)
    pairs = critical_pair(cfg.case, cfg.p, grid_size=cfg.grid_size,
                          quad=quad, tol=cfg.root_tol)
    rep = energy_report(cfg.case, cfg.p, grid_size=cfg.grid_size, quad=quad,
                        seed=cfg.seed, pairs=pairs)
    residuals = [(flux.side.value, el_residual(pot, cfg.case, cfg.p))
                 for flux, pot in pairs]
    residual_max = max(r.max_residual for _, r in residuals)
    balance = check_balance(cfg.case)

    lo, hi = sorted((rep.primal, rep.dual))
    slack = cfg.gap_tol * max(1.0, abs(rep.primal))
    checks = {
        "duality_gap": bool(rep.gap_rel <= cfg.gap_tol),
        "complementary_between": bool(lo - slack <= rep.complementary <= hi + slack),
        "equation_residual": bool(residual_max <= cfg.residual_tol),
        "second_variation_signs": bool(rep.second_var_primal_min > 0.0
                                       and rep.second_var_dual_max < 0.0),
        "mass_balanced": bool(balance.normalized),
        "gradient_admissible": all(pot.admissible for _, pot in pairs),
    }
    results = {
        "energy": _energy_dict(rep),
        "residual_max": residual_max,
        "residual_by_side": {name: r.max_residual for name, r in residuals},
        "mass_plus": balance.mass_plus,
        "mass_minus": balance.mass_minus,
        "sup_gradient": {flux.side.value: pot.sup_gradient for flux, pot in pairs},
    }
    files = []
    if cfg.figures:
        save_residual_figure(residuals, out / "residual.png", cfg.p)
        files.append("residual.png")
    return results, checks, files


def _run_sweep(cfg: RunConfig, out: Path):
    quad = QuadratureSpec(nodes=cfg.nodes)
    sw = run_sweep(cfg.case, cfg.p_values, grid_size=cfg.grid_size,
                   quad=quad, workers=_thread_cap())

    side_names = [trace.side.value for trace in sw.sides]
    header = (["p", "kantorovich", "primal", "dual", "gap_abs", "sup_gradient",
               "grad_gap", "limit_sup", "cauchy_next",
               "second_var_primal_min", "second_var_dual_max"]
              + [f"constant_{s}" for s in side_names])
    rows = []
    for i, p in enumerate(sw.p_values):
        cauchy = _fmt(float(sw.cauchy_sup[i])) if i < sw.cauchy_sup.size else ""
        rep = sw.reports[i]
        row = [p, float(sw.kantorovich[i]), float(sw.primal[i]),
               float(sw.dual[i]), float(sw.gap_abs[i]),
               float(sw.sup_gradient[i]), float(sw.grad_gap[i]),
               float(sw.limit_sup[i]), cauchy,
               rep.second_var_primal_min, rep.second_var_dual_max]
        row += [float(tr.constants[i]) for tr in sw.sides]
        rows.append(row)
    _write_csv(out / "sweep.csv", header, rows)

    gap_rel = sw.gap_abs / np.maximum(1.0, np.abs(sw.primal))
    # Consecutive Cauchy increments are only comparable when the later
    # p-step does not span a larger exponent ratio than the earlier one
    # (a wider step may legitimately move the potential further).
    pv = np.asarray(sw.p_values)
    ratios = pv[1:] / pv[:-1]
    comparable = ratios[1:] <= ratios[:-1] * (1.0 + 1e-12)
    cauchy_ok = bool(np.all(np.diff(sw.cauchy_sup)[comparable] < 0.0))
    checks = {
        "duality_gap_all": bool(np.all(gap_rel <= cfg.gap_tol)),
        "limit_distance_decreasing": bool(np.all(np.diff(sw.limit_sup) < 0.0)),
        "cauchy_decreasing": cauchy_ok,
        "second_variation_signs": bool(
            all(rep.second_var_primal_min > 0.0
                and rep.second_var_dual_max < 0.0 for rep in sw.reports)),
    }
    results = {
        "p_values": [float(p) for p in sw.p_values],
        "kantorovich": [float(v) for v in sw.kantorovich],
        "gap_abs": [float(v) for v in sw.gap_abs],
        "sup_gradient": [float(v) for v in sw.sup_gradient],
        "grad_gap": [float(v) for v in sw.grad_gap],
        "limit_sup": [float(v) for v in sw.limit_sup],
        "cauchy_sup": [float(v) for v in sw.cauchy_sup],
        "kantorovich_limit": sw.kantorovich_limit,
        "constants": {
            trace.side.value: {
                "series": [float(c) for c in trace.constants],
                "limit": trace.constant_limit,
            } for trace in sw.sides
        },
    }
    files = ["sweep.csv"]
    if cfg.figures:
        save_sweep_figure(sw, out / "sweep.png")
        files.append("sweep.png")
    return results, checks, files


def _run_oracle(cfg: RunConfig, out: Path):
    from .flux_field import case_fluxes

    quad = QuadratureSpec(nodes=cfg.nodes)
    fluxes = case_fluxes(cfg.case, cfg.p, quad=quad, tol=cfg.root_tol)
    rows = []
    entries = []
    per_side = {}
    for flux in fluxes:
        problem = discretize(cfg.case, flux.side, cfg.p, cfg.cells)
        solved = minimize_energy(problem, gtol=cfg.gtol)
        pot = build_potential(flux, cfg.p, grid_size=cfg.grid_size)
        reference = np.interp(problem.grid, pot.grid, pot.values)
        diff = np.abs(solved.values - reference)
        name = flux.side.value
        per_side[name] = {
            "sup_diff": float(diff.max()),
            "objective": solved.objective,
            "grad_inf": solved.grad_inf,
            "iterations": solved.iterations,
            "converged": solved.converged,
        }
        entries.append((name, problem.grid, solved.values, reference))
        rows += [(name, float(r), float(uo), float(ua), float(d))
                 for r, uo, ua, d in zip(problem.grid, solved.values,
                                         reference, diff)]
    _write_csv(out / "oracle.csv",
               ["side", "r", "oracle_u", "analytic_u", "abs_diff"], rows)

    checks = {
        "minimizer_converged": all(v["converged"] for v in per_side.values()),
        "routes_agree": all(v["sup_diff"] <= cfg.oracle_tol
                            for v in per_side.values()),
    }
    results = {"p": cfg.p, "cells": cfg.cells, "sides": per_side}
    files = ["oracle.csv"]
    if cfg.figures:
        save_oracle_figure(entries, out / "oracle.png", cfg.p)
        files.append("oracle.png")
    return results, checks, files


_RUNNERS = {"solve": _run_solve, "verify": _run_verify,
            "sweep": _run_sweep, "oracle": _run_oracle}


def run(cfg: RunConfig) -> dict:
    """Execute the configured mode; returns the summary payload."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results, checks, files = _RUNNERS[cfg.mode](cfg, out)
    results["files"] = sorted(files) + [f"{cfg.mode}_summary.json"]
    payload = {
        "config_echo": cfg.echo,
        "results": results,
        "checks": checks,
        "schema_version": SCHEMA_VERSION,
    }
    _write_json(out / f"{cfg.mode}_summary.json", payload)
    return payload


def main(argv=None) -> int:
    cap = os.environ.get("KPLAP_THREADS")
    if cap is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)
    try:
        cfg = parse_config(argv)
        payload = run(cfg)
    except KplapError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    return 0 if all(payload["checks"].values()) else 1


if __name__ == "__main__":
    sys.exit(main())
