"""Physical flux functions and monotone two-point numerical fluxes.

All numerical fluxes are consistent (fhat(u, u) = f(u)), Lipschitz, and
monotone: non-decreasing in the left state, non-increasing in the right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class FluxFunction:
    """Physical flux f(u), its derivative, and a wavespeed bound on intervals."""

    name: str
    f: Callable
    df: Callable
    max_wavespeed_on: Callable  # (lo, hi) -> bound on |f'| over [lo, hi]


def advection(beta: float = 1.0) -> FluxFunction:
    b = float(beta)
    return FluxFunction(
        name="advection",
        f=lambda u: b * np.asarray(u, dtype=float),
        df=lambda u: np.full_like(np.asarray(u, dtype=float), b),
        max_wavespeed_on=lambda lo, hi: abs(b),
    )


def burgers() -> FluxFunction:
    return FluxFunction(
        name="burgers",
        f=lambda u: 0.5 * np.square(np.asarray(u, dtype=float)),
        df=lambda u: np.asarray(u, dtype=float),
        max_wavespeed_on=lambda lo, hi: max(abs(lo), abs(hi)),
    )


def upwind(u_left, u_right, beta: float):
    """Upwind flux beta * u^- for linear advection with beta > 0."""
    if beta <= 0:
        raise ValueError(f"upwind flux assumes beta > 0, got {beta}")
    return beta * np.asarray(u_left, dtype=float)


def godunov_burgers(u_left, u_right):
    """Exact Riemann flux for f(u) = u^2/2.

    min over [u^-, u^+] of f when u^- <= u^+ (zero if the sonic point is
    inside), max of the endpoint values otherwise.
    """
    um = np.asarray(u_left, dtype=float)
    up = np.asarray(u_right, dtype=float)
    fm, fp = 0.5 * um * um, 0.5 * up * up
    fmin = np.where((um <= 0.0) & (0.0 <= up), 0.0, np.minimum(fm, fp))
    fmax = np.maximum(fm, fp)
    return np.where(um <= up, fmin, fmax)


def lax_friedrichs(u_left, u_right, a: float, flux: FluxFunction):
    """Lax-Friedrichs flux with viscosity parameter a >= sup |f'|."""
    um = np.asarray(u_left, dtype=float)
    up = np.asarray(u_right, dtype=float)
    return 0.5 * (flux.f(um) + flux.f(up)) - 0.5 * a * (up - um)


class NumericalFlux:
    """Two-point flux bound to a physical flux, evaluated on trace arrays."""

    def __init__(self, name: str, physical: FluxFunction, beta: float | None = None):
        if name not in ("upwind", "godunov", "lax_friedrichs"):
            raise ValueError(f"unknown numerical flux {name!r}")
        if name == "upwind":
            if physical.name != "advection":
                raise ValueError("upwind flux is defined for linear advection only")
            if beta is None or beta <= 0:
                raise ValueError("upwind flux needs the advection speed beta > 0")
        if name == "godunov" and physical.name != "burgers":
            raise ValueError("the closed-form Godunov flux covers f(u) = u^2/2 only")
        self.name = name
        self.physical = physical
        self.beta = beta

    def __call__(self, u_left, u_right):
        if self.name == "upwind":
            return upwind(u_left, u_right, self.beta)
        if self.name == "godunov":
            return godunov_burgers(u_left, u_right)
        # wavespeed chosen globally from the current trace range
        lo = min(np.min(u_left), np.min(u_right))
        hi = max(np.max(u_left), np.max(u_right))
        a = self.physical.max_wavespeed_on(lo, hi)
        return lax_friedrichs(u_left, u_right, a, self.physical)

    @property
    def is_linear(self) -> bool:
        return self.physical.name == "advection"
