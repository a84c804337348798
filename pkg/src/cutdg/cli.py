"""Experiment runner: run | converge | eigen | tv | plot subcommands.

Every command emits RFC-4180 CSV with a header row and shortest round-trip
float formatting, so identical configurations and seeds reproduce output
byte for byte.  A figure is rendered next to the CSV when --fig is given.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis, plots, projection, timestep
from .config import RunConfig, apply_overrides, load_config
from .operator import SpatialOperator
from .problems import (
    courant_for,
    get_problem,
    make_mesh,
    make_numerical_flux,
    PROBLEMS,
)
from .timestep import TimeScheme, default_scheme_kind

EIGEN_COURANT = {0: 0.3, 1: 0.3, 2: 0.2, 3: 0.1, 4: 0.1}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _build_operator(cfg: RunConfig):
    problem = get_problem(cfg.problem)
    cut_mode = cfg.cut_mode or problem.default_cut_mode
    mesh = make_mesh(problem, cfg.n_cells, cut_mode, cfg.alpha, cfg.seed)
    num_flux = make_numerical_flux(problem, cfg.flux)
    op = SpatialOperator(mesh, cfg.degree, num_flux, cfg.stabilization, problem.bc())
    return problem, mesh, op


def _initial_state(problem, mesh, cfg: RunConfig) -> np.ndarray:
    if cfg.stabilization.enabled and cfg.stabilization.gamma_mass > 0.0:
        return projection.stabilized_l2_project(
            problem.initial, mesh, cfg.degree, cfg.stabilization
        )
    return projection.l2_project(problem.initial, mesh, cfg.degree)


def _solution_rows(problem, mesh, op, u, t):
    r1 = op.degree + 1
    uc = u.reshape(mesh.n_cells, r1)
    means = op.cell_means(u)
    u_left = np.einsum("mk,mk->m", uc, op.tables.trace_left)
    u_right = np.einsum("mk,mk->m", uc, op.tables.trace_right)
    has_exact = problem.exact is not None
    mids = np.array([0.5 * (c.left + c.right) for c in mesh.cells])
    exact_mid = problem.exact(mids, t) if has_exact else None
    for i, cell in enumerate(mesh.cells):
        row = [t, i, cell.left, cell.right, means[i], u_left[i], u_right[i]]
        row.extend(uc[i])
        if has_exact:
            row.append(float(exact_mid[i]))
        yield row


def cmd_run(cfg: RunConfig, tv_out: Optional[Path] = None) -> Path:
    """Advance one configuration and write solution snapshots."""
    cfg.validate()
    problem, mesh, op = _build_operator(cfg)
    u = _initial_state(problem, mesh, cfg)
    t_final = cfg.t_final if cfg.t_final is not None else problem.default_t_final
    courant = courant_for(problem, cfg.degree, cfg.courant)
    kind = cfg.scheme or default_scheme_kind(cfg.degree)
    snapshots = sorted(set(cfg.snapshots or (t_final,)))

    header = ["time", "cell", "x_left", "x_right", "u_mean", "u_left", "u_right"]
    header += [f"coef_{k}" for k in range(cfg.degree + 1)]
    if problem.exact is not None:
        header.append("exact_mid")

    rows = list(_solution_rows(problem, mesh, op, u, 0.0)) if 0.0 in snapshots else []
    tv_rows = []
    if tv_out is not None:
        tv_rows.append((0, 0.0, analysis.total_variation_means(u, mesh, cfg.degree, op.bc.is_periodic)))

    t_prev = 0.0
    for t_snap in snapshots:
        if t_snap <= 0.0:
            continue
        scheme = TimeScheme(kind, courant, t_snap - t_prev)

        def observer(k, t_local, state, base=t_prev):
            if tv_out is not None and k > 0:
                tv_rows.append(
                    (
                        len(tv_rows),
                        base + t_local,
                        analysis.total_variation_means(
                            state, mesh, cfg.degree, op.bc.is_periodic
                        ),
                    )
                )

        # shift the time origin so boundary data g(t) sees absolute time
        stage_op = (
            _with_time_offset(op, t_prev)
            if (not op.bc.is_periodic and t_prev)
            else op
        )
        u = timestep.advance(stage_op, u, scheme, cfg.limiter, observer)
        t_prev = t_snap
        rows.extend(_solution_rows(problem, mesh, op, u, t_snap))

    out = cfg.out or Path(f"{cfg.problem}_p{cfg.degree}_n{cfg.n_cells}.csv")
    path = write_csv(out, header, rows)
    if tv_out is not None:
        write_csv(tv_out, ["step", "time", "tv"], tv_rows)
    if cfg.fig is not None:
        plots.render_solution(path, cfg.fig)
    return path


def _with_time_offset(op: SpatialOperator, offset: float) -> SpatialOperator:
    import copy

    shifted = copy.copy(op)
    bc = op.bc
    shifted.bc = replace(
        bc,
        left=(lambda t, f=bc.left: f(t + offset)) if bc.left else None,
        right=(lambda t, f=bc.right: f(t + offset)) if bc.right else None,
    )
    return shifted


def cmd_converge(cfg: RunConfig, cell_counts: Sequence[int], degrees: Sequence[int]) -> Path:
    """Error table over a refinement sequence; rates from consecutive levels."""
    problem = get_problem(cfg.problem)
    if problem.exact is None:
        raise ValueError(f"problem {cfg.problem} has no exact solution to converge to")
    rows = []
    summary = {}
    for degree in degrees:
        errors_l2, errors_linf, hs = [], [], []
        for n in cell_counts:
            sub = replace(cfg, degree=degree, n_cells=n)
            sub.validate()
            _, mesh, op = _build_operator(sub)
            u = _initial_state(problem, mesh, sub)
            t_final = sub.t_final if sub.t_final is not None else problem.default_t_final
            courant = courant_for(problem, degree, sub.courant)
            scheme = TimeScheme(sub.scheme or default_scheme_kind(degree), courant, t_final)
            u = timestep.advance(op, u, scheme, sub.limiter)
            l2, linf = analysis.error_norms(
                u, mesh, degree, lambda x: problem.exact(x, t_final)
            )
            errors_l2.append(l2)
            errors_linf.append(linf)
            hs.append(mesh.h)
        rates_l2, avg_l2 = analysis.convergence_rates(errors_l2, hs)
        rates_linf, avg_linf = analysis.convergence_rates(errors_linf, hs)
        summary[degree] = (avg_l2, avg_linf)
        for i, n in enumerate(cell_counts):
            rows.append(
                [
                    degree,
                    n,
                    hs[i],
                    errors_l2[i],
                    errors_linf[i],
                    "" if i == 0 else rates_l2[i - 1],
                    "" if i == 0 else rates_linf[i - 1],
                ]
            )
    out = cfg.out or Path(f"{cfg.problem}_convergence.csv")
    path = write_csv(
        out, ["degree", "n", "h", "l2", "linf", "l2_rate", "linf_rate"], rows
    )
    for degree, (avg_l2, avg_linf) in sorted(summary.items()):
        print(f"degree {degree}: average rates L2 {avg_l2:.3f}, Linf {avg_linf:.3f}")
    if cfg.fig is not None:
        plots.render_convergence(path, cfg.fig)
    return path


def cmd_eigen(
    cfg: RunConfig,
    alphas: Sequence[float],
    degrees: Sequence[int],
    spectrum_out: Optional[Path] = None,
) -> Path:
    """Spectra and conditioning of the advection operator across cut sizes."""
    problem = get_problem(cfg.problem)
    summary_rows = []
    spectrum_rows = []
    for degree in degrees:
        courant = cfg.courant if cfg.courant is not None else EIGEN_COURANT[degree]
        for alpha in alphas:
            cut_mode = cfg.cut_mode or "boundary"
            mesh = make_mesh(problem, cfg.n_cells, cut_mode, alpha, cfg.seed)
            report = analysis.spectrum_report(
                mesh, degree, problem.beta, cfg.stabilization, courant
            )
            stabilized = cfg.stabilization.enabled
            summary_rows.append(
                [
                    degree,
                    alpha,
                    stabilized,
                    report.kappa,
                    report.max_abs,
                    report.max_real,
                    courant,
                    report.dt,
                    sum(report.inside_rk4),
                    len(report.inside_rk4),
                ]
            )
            for ev, z, inside in zip(
                report.eigenvalues, report.scaled, report.inside_rk4
            ):
                spectrum_rows.append(
                    [degree, alpha, stabilized, ev.real, ev.imag, z.real, z.imag, inside]
                )
    out = cfg.out or Path(f"{cfg.problem}_eigen.csv")
    path = write_csv(
        out,
        [
            "degree",
            "alpha",
            "stabilized",
            "kappa",
            "max_abs",
            "max_real",
            "courant",
            "dt",
            "n_inside_rk4",
            "n_eigenvalues",
        ],
        summary_rows,
    )
    spectrum_path = spectrum_out or path.with_name(path.stem + "_spectrum.csv")
    write_csv(
        spectrum_path,
        ["degree", "alpha", "stabilized", "re", "im", "z_re", "z_im", "inside_rk4"],
        spectrum_rows,
    )
    if cfg.fig is not None:
        plots.render_spectrum(spectrum_path, cfg.fig)
    return path


def cmd_tv(cfg: RunConfig, steps: int, trials: int, seed: int) -> Path:
    """Total variation of the cell means per step, optionally over random data."""
    cfg.validate()
    problem, mesh, op = _build_operator(cfg)
    courant = (
        cfg.courant
        if cfg.courant is not None
        else (
            timestep.tvd_timestep_bound(cfg.alpha, cfg.stabilization.gamma_mass)
            if cfg.degree == 0
            else courant_for(problem, cfg.degree, None)
        )
    )
    kind = cfg.scheme or ("euler" if cfg.degree == 0 else default_scheme_kind(cfg.degree))
    dt = courant * mesh.h
    rows = []
    rng = np.random.default_rng(seed)
    r1 = cfg.degree + 1
    for trial in range(trials):
        if trials == 1:
            u = _initial_state(problem, mesh, cfg)
        else:
            u = np.zeros(mesh.n_cells * r1)
            u.reshape(mesh.n_cells, r1)[:, 0] = rng.uniform(0.0, 1.0, mesh.n_cells)
        scheme = TimeScheme(kind, courant, steps * dt)
        series = []

        def observer(k, t, state):
            series.append(
                analysis.total_variation_means(state, mesh, cfg.degree, op.bc.is_periodic)
            )

        timestep.advance(op, u, scheme, cfg.limiter, observer)
        rows.extend((trial, k, k * dt, tv) for k, tv in enumerate(series))
    out = cfg.out or Path(f"{cfg.problem}_tv.csv")
    path = write_csv(out, ["trial", "step", "time", "tv"], rows)
    if cfg.fig is not None:
        plots.render_tv(path, cfg.fig)
    return path


# -- argument parsing ---------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key-value config file")
    p.add_argument("--problem", choices=sorted(PROBLEMS))
    p.add_argument("--degree", type=int)
    p.add_argument("--cells", type=int)
    p.add_argument("--cut-mode", dest="cut_mode", choices=["none", "boundary", "interior", "multi"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--cfl", type=float)
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--flux", choices=["upwind", "godunov", "lax_friedrichs"])
    p.add_argument("--scheme", choices=["euler", "ssprk3", "rk4_5stage"])
    p.add_argument("--limiter", choices=["none", "tvb", "modified_cut"])
    p.add_argument("--tvb-m", dest="tvb_m", type=float)
    p.add_argument("--gamma-m", dest="gamma_m", type=float)
    p.add_argument("--gamma-a", dest="gamma_a", type=float)
    p.add_argument("--no-stabilization", dest="no_stabilization", action="store_true")
    p.add_argument("--out", type=Path)
    p.add_argument("--fig", type=Path)


def _config_from(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return apply_overrides(cfg, args)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cutdg",
        description="Cut discontinuous Galerkin experiments for 1D conservation laws",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="advance one configuration, write snapshots")
    _add_common(p_run)
    p_run.add_argument("--snapshots", help="comma-separated snapshot times")
    p_run.add_argument("--tv-out", dest="tv_out", type=Path, help="also write a TV series")

    p_conv = sub.add_parser("converge", help="refinement study with error rates")
    _add_common(p_conv)
    p_conv.add_argument("--cell-list", dest="cell_list", default="40,80,160,320,640")
    p_conv.add_argument("--degrees", default="0,1,2,3")

    p_eig = sub.add_parser("eigen", help="operator spectra over cut sizes")
    _add_common(p_eig)
    p_eig.add_argument("--alphas", default="1e-2,1e-10")
    p_eig.add_argument("--degrees", default="0,1,2,3,4")
    p_eig.add_argument("--spectrum-out", dest="spectrum_out", type=Path)

    p_tv = sub.add_parser("tv", help="total-variation time series")
    _add_common(p_tv)
    p_tv.add_argument("--steps", type=int, default=200)
    p_tv.add_argument("--trials", type=int, default=1)
    p_tv.add_argument("--tv-seed", dest="tv_seed", type=int, default=0)

    p_plot = sub.add_parser("plot", help="render a figure from an existing CSV")
    p_plot.add_argument("kind", choices=["convergence", "spectrum", "solution", "tv"])
    p_plot.add_argument("csv", type=Path)
    p_plot.add_argument("out", type=Path)

    args = parser.parse_args(argv)
    if args.command == "plot":
        renderer = {
            "convergence": plots.render_convergence,
            "spectrum": plots.render_spectrum,
            "solution": plots.render_solution,
            "tv": plots.render_tv,
        }[args.kind]
        renderer(args.csv, args.out)
        print(args.out)
        return 0

    cfg = _config_from(args)
    if args.command == "run":
        path = cmd_run(cfg, tv_out=args.tv_out)
    elif args.command == "converge":
        cells = [int(p) for p in args.cell_list.replace(",", " ").split()]
        degrees = [int(p) for p in args.degrees.replace(",", " ").split()]
        path = cmd_converge(cfg, cells, degrees)
    elif args.command == "eigen":
        alphas = [float(p) for p in args.alphas.replace(",", " ").split()]
        degrees = [int(p) for p in args.degrees.replace(",", " ").split()]
        path = cmd_eigen(cfg, alphas, degrees, spectrum_out=args.spectrum_out)
    elif args.command == "tv":
        path = cmd_tv(cfg, steps=args.steps, trials=args.trials, seed=args.tv_seed)
    else:  # pragma: no cover
        parser.error(f"unhandled command {args.command}")
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
