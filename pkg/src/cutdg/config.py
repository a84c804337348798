"""Run configuration: INI-style config files plus command-line overrides."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .limiter import LimiterConfig
from .stabilization import StabilizationParams


@dataclass
class RunConfig:
    problem: str = "linear_advection"
    degree: int = 1
    n_cells: int = 40
    cut_mode: str = ""  # empty -> problem default
    alpha: float = 1e-4
    seed: Optional[int] = None
    flux: Optional[str] = None
    courant: Optional[float] = None
    t_final: Optional[float] = None
    scheme: Optional[str] = None
    snapshots: tuple[float, ...] = ()
    limiter: LimiterConfig = field(default_factory=LimiterConfig.none)
    stabilization: StabilizationParams = field(default_factory=StabilizationParams)
    out: Optional[Path] = None
    fig: Optional[Path] = None

    def validate(self) -> "RunConfig":
        if not 0 <= self.degree <= 4:
            raise ValueError(f"degree must be in 0..4, got {self.degree}")
        if self.n_cells < 3:
            raise ValueError(f"cell count must be at least 3, got {self.n_cells}")
        if self.cut_mode not in ("", "none", "boundary", "interior", "multi"):
            raise ValueError(f"unknown cut mode {self.cut_mode!r}")
        if self.cut_mode == "multi" and self.seed is None:
            raise ValueError("cut_mode=multi requires a seed")
        return self


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.replace(",", " ").split())


def load_config(path) -> RunConfig:
    """Read a key-value config file with [run]/[stabilization]/[limiter]/[output]."""
    parser = configparser.ConfigParser()
    with open(path) as handle:
        parser.read_file(handle)
    cfg = RunConfig()

    if parser.has_section("run"):
        run = parser["run"]
        cfg.problem = run.get("problem", cfg.problem)
        cfg.degree = run.getint("degree", cfg.degree)
        cfg.n_cells = run.getint("cells", cfg.n_cells)
        cfg.cut_mode = run.get("cut_mode", cfg.cut_mode)
        cfg.alpha = run.getfloat("alpha", cfg.alpha)
        if "seed" in run:
            cfg.seed = run.getint("seed")
        if "flux" in run:
            cfg.flux = run.get("flux")
        if "cfl" in run:
            cfg.courant = run.getfloat("cfl")
        if "t_final" in run:
            cfg.t_final = run.getfloat("t_final")
        if "scheme" in run:
            cfg.scheme = run.get("scheme")
        if "snapshots" in run:
            cfg.snapshots = _floats(run.get("snapshots"))

    if parser.has_section("stabilization"):
        sec = parser["stabilization"]
        cfg.stabilization = StabilizationParams(
            gamma_mass=sec.getfloat("gamma_m", 0.25),
            gamma_stiffness=sec.getfloat("gamma_a", 0.75),
            enabled=sec.getboolean("enabled", True),
        )

    if parser.has_section("limiter"):
        sec = parser["limiter"]
        cfg.limiter = LimiterConfig(
            mode=sec.get("mode", "none"), m=sec.getfloat("tvb_m", 0.0)
        )

    if parser.has_section("output"):
        sec = parser["output"]
        if "csv" in sec:
            cfg.out = Path(sec.get("csv"))
        if "fig" in sec:
            cfg.fig = Path(sec.get("fig"))
    return cfg


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    """Merge parsed argparse values (None means: keep the config value)."""
    if getattr(args, "problem", None) is not None:
        cfg.problem = args.problem
    if getattr(args, "degree", None) is not None:
        cfg.degree = args.degree
    if getattr(args, "cells", None) is not None:
        cfg.n_cells = args.cells
    if getattr(args, "cut_mode", None) is not None:
        cfg.cut_mode = args.cut_mode
    if getattr(args, "alpha", None) is not None:
        cfg.alpha = args.alpha
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "flux", None) is not None:
        cfg.flux = args.flux
    if getattr(args, "cfl", None) is not None:
        cfg.courant = args.cfl
    if getattr(args, "t_final", None) is not None:
        cfg.t_final = args.t_final
    if getattr(args, "scheme", None) is not None:
        cfg.scheme = args.scheme
    if getattr(args, "snapshots", None) is not None:
        cfg.snapshots = _floats(args.snapshots)
    if getattr(args, "limiter", None) is not None:
        cfg.limiter = replace(cfg.limiter, mode=args.limiter)
    if getattr(args, "tvb_m", None) is not None:
        cfg.limiter = replace(cfg.limiter, m=args.tvb_m)
    gamma_m = getattr(args, "gamma_m", None)
    gamma_a = getattr(args, "gamma_a", None)
    no_stab = getattr(args, "no_stabilization", False)
    if gamma_m is not None or gamma_a is not None or no_stab:
        cfg.stabilization = StabilizationParams(
            gamma_mass=gamma_m if gamma_m is not None else cfg.stabilization.gamma_mass,
            gamma_stiffness=(
                gamma_a if gamma_a is not None else cfg.stabilization.gamma_stiffness
            ),
            enabled=not no_stab and cfg.stabilization.enabled,
        )
    if getattr(args, "out", None) is not None:
        cfg.out = Path(args.out)
    if getattr(args, "fig", None) is not None:
        cfg.fig = Path(args.fig)
    return cfg
