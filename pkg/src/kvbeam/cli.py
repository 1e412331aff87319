"""
Command line interface.

    kvbeam simulate|invert|grad-check|constants|stability-table --config FILE [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 non-convergence. ``BEAM_SEED`` overrides the noise seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, parse_config
from .constants import (DomainError, evaluate_constants, stability_table, write_stability_table)
from .experiments import run_twin
from .forward import solve_direct, trace_inequality_check
from .inversion import (STOP_MOROZOV, STOP_NON_MONOTONE, STOP_SMALL_GRADIENT, TikhonovConfig,
                        fd_gradient_oracle, random_directions, synthesize)
from .model import ModelError, validate_coefficients
from .timestep import NumericalFailure, write_rows

logger = logging.getLogger("kvbeam")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NONCONVERGED = 0, 2, 3, 4


class NonConvergence(RuntimeError):
    pass


def _outdir(cfg: RunConfig, override) -> Path:
    d = Path(override) if override else Path(cfg["output"]["directory"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _model(cfg: RunConfig):
    try:
        c = cfg.coefficients()
        bad = validate_coefficients(c)
        if bad:
            raise ConfigError("[beam] " + "; ".join(bad))
        return c, cfg.mesh(), cfg.grid()
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc


def _seed(cfg: RunConfig) -> int:
    env = os.environ.get("BEAM_SEED")
    if env is None:
        return cfg["noise"]["seed"]
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"BEAM_SEED={env!r} is not an integer") from exc


def _inverse_kwargs(cfg: RunConfig) -> dict:
    inv = cfg["inverse"]
    return dict(alpha=inv["alpha"], reg_order=inv["reg_order"], step_rule=inv["step_rule"], step=inv["step"],
                max_iters=inv["max_iters"], morozov_tau=inv["morozov_tau"], grad_tol=inv["grad_tol"],
                smoothing=inv["smoothing"])


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    c, mesh, grid = _model(cfg)
    g = cfg.source()
    sol = solve_direct(c, mesh, grid, g)
    t = grid.t
    write_rows(out / "deflection.csv", ["t", "nu"], np.column_stack([t, sol.deflection]))
    write_rows(out / "moment.csv", ["t", "omega", "omega_direct"], np.column_stack([t, sol.moment, sol.moment_direct]))
    write_rows(out / "energy.csv", ["t", "residual"], np.column_stack([t, sol.energy]))
    sol.traces_to_csv(out / "traces.csv")
    sol.trajectory.to_csv(out / "trajectory.csv")
    rep = trace_inequality_check(sol, g)
    print(f"max |energy residual| = {np.max(np.abs(sol.energy)):.3e}")
    print(f"trace inequality margins: deflection {rep.deflection_margin:.3e}, force {rep.force_margin:.3e}")
    return EXIT_OK


def cmd_invert(cfg: RunConfig, out: Path) -> int:
    c, mesh, grid = _model(cfg)
    inv = cfg["inverse"]
    kw = _inverse_kwargs(cfg)
    twin = run_twin(c, mesh, grid, inv["problem"], cfg.source_function(), cfg["noise"]["delta"], _seed(cfg),
                    refine=inv["refine"], directions=inv["directions"], **kw)
    res = twin.result
    res.reconstruction_to_csv(out / "reconstruction.csv", twin.g_true)
    res.history_to_csv(out / "history.csv")
    meta = {
        "config": cfg.as_dict(),
        "seed": _seed(cfg),
        "stop_reason": res.stop_reason,
        "iterations": res.iterations,
        "relative_error": twin.rel_error,
        "residual_norm": res.residual_norm,
        "relative_residual": res.residual_norm / twin.data.norm() if twin.data.norm() > 0 else 0.0,
        "smoothing_width": inv["smoothing"] if inv["problem"] == "IBVP2" else None,
        "constants": evaluate_constants(c, grid.T, inv["alpha"] or None).as_dict(),
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"{inv['problem']}: stop={res.stop_reason} iterations={res.iterations} "
          f"relative L2 error={twin.rel_error:.4f}")
    if res.stop_reason == STOP_NON_MONOTONE:
        raise NumericalFailure("functional increased under a constant step")
    # without noise there is no discrepancy level to reach
    if cfg["noise"]["delta"] > 0 and res.stop_reason not in (STOP_MOROZOV, STOP_SMALL_GRADIENT):
        raise NonConvergence("maximum iterations reached without meeting the discrepancy level")
    return EXIT_OK


def cmd_grad_check(cfg: RunConfig, out: Path) -> int:
    c, mesh, grid = _model(cfg)
    inv, gc = cfg["inverse"], cfg["gradcheck"]
    kind = "deflection" if inv["problem"] == "IBVP1" else "moment"
    data = synthesize(c, mesh, grid, cfg.source_function(), kind, inv["refine"])
    tk = TikhonovConfig(inv["problem"], data, c, mesh, **_inverse_kwargs(cfg))
    # linearization point: half the true source (a nonzero residual)
    g = 0.5 * np.asarray(cfg.source_function()(grid.t), dtype=float) * np.ones(grid.size)
    g = tk.signal(g)
    dirs = random_directions(grid, gc["n_directions"], tk.klass, gc["seed"])
    gn = float(np.sqrt(np.dot(grid.weights(), g.samples**2)))
    rep = fd_gradient_oracle(g, tk, dirs, eps=gc["eps_rel"] * (gn if gn > 0 else 1.0))
    rows = [(i, a, f, e) for i, (a, f, e) in enumerate(zip(rep.adjoint, rep.finite_difference, rep.rel_errors))]
    write_rows(out / "gradcheck.csv", ["direction", "adjoint", "finite_difference", "rel_error"], rows)
    print(f"{inv['problem']} alpha={inv['alpha']:g}: max relative error {rep.max_rel_error:.3e}")
    return EXIT_OK


def cmd_constants(cfg: RunConfig, out: Path) -> int:
    c, mesh, grid = _model(cfg)
    b = evaluate_constants(c, grid.T, cfg["constants"]["alpha"])
    write_rows_named(out / "constants.csv", b.as_dict())
    (out / "constants_audit.txt").write_text(b.audit() + "\n")
    print(b.audit())
    return EXIT_OK


def write_rows_named(path, mapping) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "value"])
        for k, v in mapping.items():
            w.writerow([k, "" if v is None else repr(float(v))])


def cmd_stability_table(cfg: RunConfig, out: Path) -> int:
    st = cfg["stability"]
    rows = stability_table(st["rows"], st["ell"], st["r0"], st["published_rounding"])
    write_stability_table(rows, out / "stability_table.csv")
    print(f"{'T':>6s} {'alpha':>8s} {'kappa0':>10s} {'C_ST':>10s}")
    for r in rows:
        print(f"{r.T:6.2f} {r.alpha:8.0e} {r.kappa0:10.4g} {r.c_st:10.2f}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "invert": cmd_invert,
    "grad-check": cmd_grad_check,
    "constants": cmd_constants,
    "stability-table": cmd_stability_table,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kvbeam", description="Damped cantilever simulation and shear-force identification.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI-style run configuration")
    p.add_argument("--out", default=None, help="output directory (overrides [output] directory)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
        out = _outdir(cfg, args.out)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, DomainError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NonConvergence as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
