"""Figure rendering from the CLI's CSV files.

Plots never re-run simulations: every quantity in a figure, including the
rate legends, is recomputed from the CSV it is given.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import convergence_rates, rk4_amplification


class PlotDataError(ValueError):
    """CSV is empty or lacks the columns a plot kind needs."""


def _read_csv(path) -> dict[str, list[str]]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise PlotDataError(f"{path}: empty CSV")
        columns: dict[str, list[str]] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name in reader.fieldnames:
                columns[name].append(row[name])
    if not next(iter(columns.values()), []):
        raise PlotDataError(f"{path}: no data rows")
    return columns


def _require(columns, names, path):
    missing = [n for n in names if n not in columns]
    if missing:
        raise PlotDataError(f"{path}: missing columns {missing}")


def render_convergence(csv_path, out_path) -> Path:
    """Log-log error curves per degree; legend rates recomputed from the CSV."""
    columns = _read_csv(csv_path)
    _require(columns, ["degree", "h", "l2", "linf"], csv_path)
    degree = np.array([int(v) for v in columns["degree"]])
    h = np.array([float(v) for v in columns["h"]])
    l2 = np.array([float(v) for v in columns["l2"]])
    linf = np.array([float(v) for v in columns["linf"]])

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for r in sorted(set(degree)):
        sel = degree == r
        order = np.argsort(h[sel])[::-1]
        hh, e2, ei = h[sel][order], l2[sel][order], linf[sel][order]
        _, rate2 = convergence_rates(e2, hh)
        _, ratei = convergence_rates(ei, hh)
        (line,) = ax.loglog(hh, e2, "o-", label=f"$P^{r}$ $L^2$ {rate2:.2f}")
        ax.loglog(
            hh, ei, "s--", color=line.get_color(),
            label=rf"$P^{r}$ $L^\infty$ {ratei:.2f}",
        )
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8, loc="lower right")
    return _save(fig, out_path)


def render_spectrum(csv_path, out_path) -> Path:
    """Scaled eigenvalues dt*v with the RK4 stability boundary |R(z)| = 1."""
    columns = _read_csv(csv_path)
    _require(columns, ["degree", "z_re", "z_im"], csv_path)
    degree = np.array([int(v) for v in columns["degree"]])
    z_re = np.array([float(v) for v in columns["z_re"]])
    z_im = np.array([float(v) for v in columns["z_im"]])

    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    pad = 0.5
    lo_re = min(-3.0, z_re.min() - pad)
    hi_re = max(1.0, z_re.max() + pad)
    lim_im = max(3.0, np.abs(z_im).max() + pad)
    xs = np.linspace(lo_re, hi_re, 401)
    ys = np.linspace(-lim_im, lim_im, 401)
    grid_x, grid_y = np.meshgrid(xs, ys)
    mag = np.abs(rk4_amplification(grid_x + 1j * grid_y))
    ax.contour(grid_x, grid_y, mag, levels=[1.0], colors="k", linewidths=1.0)
    for r in sorted(set(degree)):
        sel = degree == r
        ax.plot(z_re[sel], z_im[sel], "o", ms=3, label=f"$P^{r}$")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.axvline(0.0, color="gray", lw=0.5)
    ax.set_xlabel(r"Re$(\Delta t\, v)$")
    ax.set_ylabel(r"Im$(\Delta t\, v)$")
    ax.legend(fontsize=8)
    ax.set_aspect("equal")
    return _save(fig, out_path)


def render_solution(csv_path, out_path) -> Path:
    """Cell-wise profile from endpoint traces, with the exact overlay if present."""
    columns = _read_csv(csv_path)
    _require(columns, ["time", "x_left", "x_right", "u_left", "u_right"], csv_path)
    times = np.array([float(v) for v in columns["time"]])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    final = times.max()
    sel = times == final
    x_l = np.array([float(v) for v in columns["x_left"]])[sel]
    x_r = np.array([float(v) for v in columns["x_right"]])[sel]
    u_l = np.array([float(v) for v in columns["u_left"]])[sel]
    u_r = np.array([float(v) for v in columns["u_right"]])[sel]
    xs = np.empty(2 * len(x_l))
    us = np.empty_like(xs)
    xs[0::2], xs[1::2] = x_l, x_r
    us[0::2], us[1::2] = u_l, u_r
    ax.plot(xs, us, "-", lw=1.0, label=f"numerical, t={final:g}")
    if "exact_mid" in columns:
        mids = 0.5 * (x_l + x_r)
        exact = np.array([float(v) for v in columns["exact_mid"]])[sel]
        ax.plot(mids, exact, "k--", lw=0.8, label="exact")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(fontsize=8)
    return _save(fig, out_path)


def render_tv(csv_path, out_path) -> Path:
    """Total variation of the cell means against time, one line per trial."""
    columns = _read_csv(csv_path)
    _require(columns, ["time", "tv"], csv_path)
    t = np.array([float(v) for v in columns["time"]])
    tv = np.array([float(v) for v in columns["tv"]])
    trial = (
        np.array([int(v) for v in columns["trial"]])
        if "trial" in columns
        else np.zeros(len(t), dtype=int)
    )
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for k in sorted(set(trial)):
        sel = trial == k
        ax.plot(t[sel], tv[sel], lw=0.9)
    ax.set_xlabel("t")
    ax.set_ylabel(r"TV($\bar{u}$)")
    ax.grid(True, alpha=0.3)
    return _save(fig, out_path)


def _save(fig, out_path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path
