"""Command line entry point: ``pacok <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis
from .io import (
    ConfigError,
    EnergyLog,
    RunConfig,
    SnapshotError,
    fmt_float,
    load_config,
    read_snapshot,
    write_snapshot,
)
from .model import ModelParams, forces
from .solver import NonMonotoneEnergy, Solver, stability_constants
from .spectral import Field, Grid, GridSpec

log = logging.getLogger("pacok")

EX_OK = 0
EX_FAIL = 1
EX_ENERGY = 2
EX_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def initial_field(cfg: RunConfig, grid: Grid) -> np.ndarray:
    if cfg.ic == "disc":
        return analysis.ic_disc_indicator(grid, cfg.omega)
    if cfg.ic == "tanh_disc":
        return analysis.ic_tanh_disc(grid, cfg.omega, cfg.eps, cfg.r_shift)
    if cfg.ic == "block_random":
        return analysis.ic_block_random(grid, cfg.ic_ratio, cfg.seed)
    return read_snapshot(cfg.ic_file, expect=grid.spec).values


def _snapshot_name(step: int) -> str:
    return f"phi_{step:08d}.bin"


def simulate(cfg: RunConfig, out: Path | None) -> tuple[np.ndarray, bool, bool]:
    """Run the solver for ``cfg``; returns ``(phi, converged, energy_rose)``.

    With ``out`` set, writes ``energy.csv``, periodic snapshots and
    ``phi_final.bin`` there.
    """
    grid = Grid(cfg.grid_spec())
    solver = Solver(grid, cfg.model_params(), cfg.solver_params())
    phi0 = initial_field(cfg, grid)
    converged = False
    phi = phi0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonMonotoneEnergy)
        if out is None:
            for phi, report in solver.iterate(phi0):
                converged = report.converged
        else:
            out.mkdir(parents=True, exist_ok=True)
            write_snapshot(Field(grid.spec, phi0), out / _snapshot_name(0))
            with open(out / "energy.csv", "w", newline="") as fh:
                elog = EnergyLog(fh)
                for phi, report in solver.iterate(phi0):
                    elog.append(report)
                    if cfg.snapshot_stride and report.step % cfg.snapshot_stride == 0:
                        write_snapshot(Field(grid.spec, phi), out / _snapshot_name(report.step))
                    converged = report.converged
            write_snapshot(Field(grid.spec, phi), out / "phi_final.bin")
    rose = any(issubclass(w.category, NonMonotoneEnergy) for w in caught)
    for w in caught:
        if not issubclass(w.category, NonMonotoneEnergy):
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    return phi, converged, rose


# -- subcommands --------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.output_dir or cfg.output_dir)
    _, converged, rose = simulate(cfg, out)
    print(f"converged: {'yes' if converged else 'no'}; output in {out}")
    if rose and cfg.enforce_stability:
        log.error("discrete energy increased during the run")
        return EX_ENERGY
    return EX_OK


def cmd_forces(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    phi, converged, rose = simulate(cfg, None)
    grid = Grid(cfg.grid_spec())
    tension, nonlocal_, volume = forces(grid, phi, cfg.model_params())
    j = int(np.argmin(np.abs(grid.y)))
    with open(out / "forces.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "phi", "tension", "nonlocal", "volume", "sum"])
        for i, x in enumerate(grid.x):
            row = (x, phi[i, j], tension[i, j], nonlocal_[i, j], volume[i, j])
            w.writerow([fmt_float(v) for v in row] + [fmt_float(sum(row[2:]))])
    write_snapshot(Field(grid.spec, phi), out / "phi_final.bin")
    total = tension + nonlocal_ + volume
    far, fit = analysis.tanh_profile_deviation(grid, phi, cfg.eps)
    print(f"converged: {'yes' if converged else 'no'}")
    print(f"force_sum_linf = {fmt_float(float(np.max(np.abs(total))))}")
    print(f"far_field_dev = {fmt_float(far)}")
    print(f"tanh_fit_err = {fmt_float(fit)}")
    if rose and cfg.enforce_stability:
        return EX_ENERGY
    return EX_OK


def stability_report(cfg: RunConfig) -> list[str]:
    kappa_min, beta_min = stability_constants(cfg.model_params(), cfg.grid_spec())
    ok_k = cfg.kappa_h >= kappa_min
    ok_b = cfg.beta_h >= beta_min
    return [
        f"kappa_min = {fmt_float(kappa_min)}",
        f"beta_min = {fmt_float(beta_min)}",
        f"kappa_h = {fmt_float(cfg.kappa_h)} {'>=' if ok_k else '<'} kappa_min: {'satisfied' if ok_k else 'violated'}",
        f"beta_h = {fmt_float(cfg.beta_h)} {'>=' if ok_b else '<'} beta_min: {'satisfied' if ok_b else 'violated'}",
    ]


def cmd_stability(args) -> int:
    cfg = load_config(args.config)
    print("\n".join(stability_report(cfg)))
    return EX_OK


def cmd_converge(args) -> int:
    grid = Grid(GridSpec(1.0, 1.0, args.N, args.N))
    params = ModelParams(eps=args.eps_over_h * grid.spec.hx, gamma=args.gamma, omega=args.omega, M=args.M)
    taus = analysis.halved_taus(args.tau_max, args.tau_min)
    rows = analysis.convergence_study(grid, params, taus, args.tau_bench, args.T, args.kappa_h, args.beta_h)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "error", "rate"])
        for r in rows:
            w.writerow([fmt_float(r.tau), fmt_float(r.error), "" if r.rate is None else fmt_float(r.rate)])
    for r in rows:
        rate = "--" if r.rate is None else f"{r.rate:.3f}"
        print(f"{r.tau:.4e}  {r.error:.4e}  {rate}")
    return EX_OK


def _bubble_job(job: tuple[RunConfig, float]) -> int:
    cfg, threshold = job
    phi, converged, _ = simulate(cfg, None)
    if not converged:
        log.warning("gamma=%g seed=%d stopped at max_steps", cfg.gamma, cfg.seed)
    return analysis.count_bubbles(phi, threshold)


def _workers() -> int:
    env = os.environ.get("PACOK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep_gamma(
    gammas: Sequence[float],
    seeds: Sequence[int],
    base: RunConfig,
    threshold: float = 0.5,
) -> list[tuple[float, int, int]]:
    """Run every ``(gamma, seed)`` pair; returns ``(gamma, seed, count)`` rows."""
    jobs = []
    for gamma in gammas:
        for seed in seeds:
            cfg = RunConfig(**{**vars(base), "gamma": gamma, "seed": seed, "notes": []})
            jobs.append((cfg, threshold))
    workers = min(_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_bubble_job, jobs))
    else:
        counts = [_bubble_job(j) for j in jobs]
    return [(cfg.gamma, cfg.seed, c) for (cfg, _), c in zip(jobs, counts)]


def cmd_sweep(args) -> int:
    gammas = [float(g) for g in args.gammas.split(",")]
    N = args.N
    base = RunConfig(
        eps=args.eps_over_h * 2.0 / N,
        gamma=gammas[0],
        tau=args.tau,
        Nx=N,
        Ny=N,
        kappa_h=args.kappa_h,
        beta_h=args.beta_h,
        tol=args.tol,
        max_steps=args.max_steps,
        enforce_stability=args.enforce_stability,
        ic="block_random",
        ic_ratio=args.ratio,
        log_stride=1000,
    )
    rows = sweep_gamma(gammas, range(args.seed0, args.seed0 + args.seeds), base, args.threshold)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bubbles.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma", "seed", "count"])
        for gamma, seed, count in rows:
            w.writerow([fmt_float(gamma), seed, count])
    summary = []
    for gamma in gammas:
        counts = [c for g, _, c in rows if g == gamma]
        mode = analysis.modal_count(counts)
        flag = "" if len(set(counts)) == 1 else f"  (seeds disagree: {counts})"
        print(f"gamma = {gamma:g}: K_b = {mode}{flag}")
        summary.append((gamma, mode))
    positive = [(g, c) for g, c in summary if c > 0]
    if len(positive) >= 2 and len({g for g, _ in positive}) >= 2:
        exponent, prefactor = analysis.fit_power_law(positive)
        print(f"exponent = {exponent:.4f}, prefactor = {prefactor:.4g}")
        (out / "power_law.txt").write_text(f"exponent = {fmt_float(exponent)}\nprefactor = {fmt_float(prefactor)}\n")
    return EX_OK


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pacok", description="Penalized Allen-Cahn-Ohta-Kawasaki simulations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="{run,converge,sweep-gamma,forces,stability}")
    sub.required = True

    p = sub.add_parser("run", help="run one simulation from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("forces", help="run to equilibrium and write y = 0 force cross-sections")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_forces)

    p = sub.add_parser("stability", help="print the energy-stability thresholds for a config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("converge", help="temporal convergence table at fixed T")
    p.add_argument("--eps-over-h", type=float, required=True)
    p.add_argument("--N", type=int, default=512)
    p.add_argument("--gamma", type=float, default=100.0)
    p.add_argument("--omega", type=float, default=0.15)
    p.add_argument("--M", type=float, default=1000.0)
    p.add_argument("--kappa-h", type=float, default=2000.0)
    p.add_argument("--beta-h", type=float, default=2.0)
    p.add_argument("--T", type=float, default=0.1)
    p.add_argument("--tau-max", type=float, default=1e-1)
    p.add_argument("--tau-min", type=float, default=1.5625e-3)
    p.add_argument("--tau-bench", type=float, default=1e-5)
    p.add_argument("--output-dir", default=".")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("sweep-gamma", help="bubble counts over a gamma sweep")
    p.add_argument("--gammas", default="200,500,2000,5000,20000")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed0", type=int, default=0)
    p.add_argument("--N", type=int, default=512)
    p.add_argument("--eps-over-h", type=float, default=10.0)
    p.add_argument("--tau", type=float, default=5e-3)
    p.add_argument("--ratio", type=int, default=16)
    p.add_argument("--kappa-h", type=float, default=2000.0)
    p.add_argument("--beta-h", type=float, default=2.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-steps", type=int, default=1_000_000)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument(
        "--enforce-stability",
        action=argparse.BooleanOptionalAction,
        default=False,
        help="clamp kappa_h/beta_h to the analytic thresholds (off reproduces the literal constants)",
    )
    p.add_argument("--output-dir", default=".")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EX_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SnapshotError, OSError, ValueError) as exc:
        print(f"pacok: error: {exc}", file=sys.stderr)
        return EX_FAIL


if __name__ == "__main__":
    sys.exit(main())
