"""Command-line front end: run a scenario and write plot-ready CSV plus metadata."""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bath import compare_to_effective, gamma_adiabatic, gamma_effective, run_phase_ensemble
from .config import PRESETS, ConfigError, ScenarioConfig, load_config
from .oracles import format_report, two_mode_polarization_report
from .propagate import InvariantDriftError, Trajectory, evolve_exact, evolve_rk4

EXIT_OK = 0
EXIT_IO = 1
EXIT_DRIFT = 2
EXIT_CONFIG = 3

OUT_DIR_ENV = "LIGHTDEPOL_OUT_DIR"
DEFAULT_OUT_DIR = "lightdepol_runs"
CSV_NAME = "timeseries.csv"
META_NAME = "run.json"
RHO_NAME = "final_rho.json"


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def csv_columns(n_max: int, microscopic: bool) -> list[str]:
    cols = ["t", "s_x", "s_y", "s_z", "P", "purity", "trace", "min_eig"]
    cols += [f"block_w_{N}" for N in range(n_max + 1)]
    if microscopic:
        cols += ["stderr_s_x", "stderr_s_y", "stderr_s_z", "stderr_P"]
    return cols


def trajectory_csv(traj: Trajectory, n_max: int, microscopic: bool = False) -> str:
    cols = csv_columns(n_max, microscopic)
    lines = [",".join(cols)]
    for k, t in enumerate(traj.times):
        row = [t, *traj.s[k], traj.P[k], traj.purity[k], traj.trace[k], traj.min_eig[k], *traj.block_weights[k]]
        if microscopic:
            row += list(traj.stderr[k])
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def rho_json(rho: np.ndarray) -> dict:
    return {
        "dim": int(rho.shape[0]),
        "layout": "row-major [re, im] pairs",
        "data": [[[float(z.real), float(z.imag)] for z in row] for row in rho],
    }


def simulate(cfg: ScenarioConfig, seed: int | None = None, threads: int = 1) -> tuple[Trajectory, dict]:
    """Run the configured propagation; returns the trajectory and extra metadata."""
    basis = cfg.basis()
    rho0 = cfg.initial_state(basis)
    keep = cfg.final_rho
    if not cfg.microscopic:
        evolve = evolve_exact if cfg.integrator == "exact" else evolve_rk4
        return evolve(rho0, cfg.field_model, cfg.grid, keep_states=keep), {}

    seed = cfg.seed if seed is None else seed
    res = run_phase_ensemble(
        cfg.atoms,
        rho0,
        cfg.grid,
        cfg.n_samples,
        seed,
        which_H=cfg.which_H,
        threads=threads,
        antithetic=cfg.antithetic,
        cross_atom_term=cfg.cross_atom_term,
        field_omega=cfg.field_omega,
        keep_states=keep,
    )
    extra = {"block_leakage": res.block_leakage}
    if all(a.g_abs > 0 and a.gamma_decay > 0 and a.delta != 0 and a.n_bar > 0 for a in cfg.atoms):
        cmp = compare_to_effective(res, cfg.atoms, rho0, cfg.grid)
        extra.update(
            gamma_effective=gamma_effective(cfg.atoms),
            gamma_adiabatic=gamma_adiabatic(cfg.atoms),
            fitted_gamma=cmp.fitted_gamma,
            max_abs_dev_vs_effective=cmp.max_abs_dev,
        )
    return res.trajectory, extra


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (float, np.floating)):
        return float(x) if np.isfinite(x) else None
    return x


def _write(path: Path, text: str) -> None:
    path.write_text(text)


def run_scenario(cfg: ScenarioConfig, out_dir: Path, seed: int | None = None, threads: int = 1) -> int:
    seed_used = cfg.seed if seed is None else seed
    meta = {
        "config": {**cfg.raw, "seed": seed_used},
        "versions": {
            "lightdepol": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "seed": seed_used,
        "threads": threads,
    }
    start = time.perf_counter()
    status = EXIT_OK
    traj = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            traj, extra = simulate(cfg, seed, threads)
            meta.update(extra)
        except InvariantDriftError as exc:
            status = EXIT_DRIFT
            meta["error"] = str(exc)
            print(f"error: invariant drift: {exc}", file=sys.stderr)
    meta["warnings"] = [str(w.message) for w in caught]
    for msg in meta["warnings"]:
        print(f"warning: {msg}", file=sys.stderr)
    meta["wall_time_s"] = time.perf_counter() - start
    meta["exit_code"] = status

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if traj is not None:
            _write(out_dir / CSV_NAME, trajectory_csv(traj, cfg.N_max, cfg.microscopic))
            if cfg.final_rho:
                _write(out_dir / RHO_NAME, json.dumps(rho_json(traj.states[-1])) + "\n")
        _write(out_dir / META_NAME, json.dumps(_jsonable(meta), indent=2) + "\n")
    except OSError as exc:
        print(f"error: cannot write {exc.filename or out_dir}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    return status


def _resolve_out(arg: str | None, cfg: ScenarioConfig) -> Path:
    return Path(arg or cfg.out_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lightdepol", description="Depolarization of quantized light fields.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write CSV + metadata")
    run.add_argument("config", help="scenario JSON file")
    run.add_argument("--out", help=f"output directory (default: config out_dir, ${OUT_DIR_ENV}, or ./{DEFAULT_OUT_DIR})")
    run.add_argument("--seed", type=int, help="override the ensemble seed")
    run.add_argument("--threads", type=int, default=1, help="worker threads for the phase ensemble")

    val = sub.add_parser("validate", help="parse and validate a scenario without running it")
    val.add_argument("config")

    sub.add_parser("presets", help="list named initial states")

    rep = sub.add_parser("report", help="two-mode P(t) table: definition vs closed forms")
    rep.add_argument("--gamma1", type=float, default=1.0)
    rep.add_argument("--gamma2", type=float, default=1.0)
    rep.add_argument("--times", type=float, nargs="+", default=[0.0, 0.25, 0.5, 1.0, 2.0])
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "presets":
        for name, desc in PRESETS.items():
            print(f"{name:12s} {desc}")
        return EXIT_OK
    if args.command == "report":
        print(format_report(two_mode_polarization_report(args.gamma1, args.gamma2, args.times)))
        return EXIT_OK

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"ok: {args.config}")
        return EXIT_OK

    if args.seed is not None and args.seed < 0:
        print("config error: --seed must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    out = _resolve_out(args.out, cfg)
    code = run_scenario(cfg, out, args.seed, args.threads)
    if code == EXIT_OK:
        print(f"wrote {out / CSV_NAME}")
    return code


if __name__ == "__main__":
    sys.exit(main())
