"""Diagnostics: error norms, total variation, spectra, exact solutions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import basis, linalg
from .flux import NumericalFlux, advection
from .mesh import CutMesh
from .operator import BoundaryCondition, SpatialOperator, assemble_linear_stiffness
from .stabilization import StabilizationParams


def error_norms(
    u: np.ndarray, mesh: CutMesh, degree: int, exact: Callable
) -> tuple[float, float]:
    """(L2, Linf) of u_h - exact over the physical domain.

    L2 by per-cell Gauss quadrature with degree+3 points; Linf sampled at
    those quadrature points plus the physical cell endpoints.
    """
    rule = basis.gauss_legendre(degree + 3)
    nodes = np.asarray(rule.nodes)
    weights = np.asarray(rule.weights)
    uc = np.asarray(u, dtype=float).reshape(mesh.n_cells, degree + 1)
    sq = 0.0
    linf = 0.0
    for i, cell in enumerate(mesh.cells):
        half = 0.5 * cell.length
        x = np.concatenate(
            [0.5 * (cell.left + cell.right) + half * nodes, [cell.left, cell.right]]
        )
        xi = (x - cell.center) / (0.5 * cell.width)
        diff = basis.eval_reference(degree, xi) @ uc[i] - np.asarray(
            exact(x), dtype=float
        )
        sq += half * float(weights @ diff[: rule.n] ** 2)
        linf = max(linf, float(np.abs(diff).max()))
    return float(np.sqrt(sq)), linf


def total_variation_means(
    u: np.ndarray, mesh: CutMesh, degree: int | None = None, periodic: bool = True
) -> float:
    """Total variation of the physical cell means, wrapping when periodic."""
    from .limiter import cell_means  # local import; limiter depends on operator

    if degree is None:
        degree = np.asarray(u).size // mesh.n_cells - 1
    means = cell_means(u, mesh, degree)
    tv = float(np.abs(np.diff(means)).sum())
    if periodic:
        tv += abs(float(means[0] - means[-1]))
    return tv


def rk4_amplification(z: np.ndarray) -> np.ndarray:
    """Stability polynomial 1 + z + z^2/2 + z^3/6 + z^4/24 of classical RK4."""
    z = np.asarray(z)
    return 1.0 + z + z**2 / 2.0 + z**3 / 6.0 + z**4 / 24.0


@dataclass(frozen=True)
class SpectrumReport:
    degree: int
    kappa: float
    max_abs: float
    max_real: float
    eigenvalues: tuple[complex, ...]
    scaled: tuple[complex, ...]  # dt * eigenvalues
    inside_rk4: tuple[bool, ...]
    dt: float


def spectrum_report(
    mesh: CutMesh,
    degree: int,
    beta: float,
    params: StabilizationParams,
    courant: float,
    rk4_tol: float = 0.0,
) -> SpectrumReport:
    """Condition number of M~ and spectrum of M~^-1 S~ for periodic advection.

    Eigenvalues come from the QZ factorization of the pencil (S~, M~) so the
    unstabilized pathology (numerically singular cut mass blocks) stays
    computable; directions along which the mass degenerates to working
    precision carry infinite pencil eigenvalues and are dropped.  The
    condition number is sigma_max/sigma_min, which matches the eigenvalue
    ratio for these symmetric matrices.
    """
    from .operator import assemble_mass

    mass = assemble_mass(mesh, degree, params)
    stiff = assemble_linear_stiffness(
        mesh, degree, beta, params, BoundaryCondition.periodic()
    )
    kappa = float(np.linalg.cond(mass))
    eigs = linalg.generalized_eigenvalues(stiff, mass, drop_infinite=True)
    order = np.lexsort((eigs.imag, eigs.real))
    eigs = eigs[order]
    dt = courant * mesh.h
    scaled = dt * eigs
    inside = np.abs(rk4_amplification(scaled)) <= 1.0 + rk4_tol
    return SpectrumReport(
        degree=degree,
        kappa=kappa,
        max_abs=float(np.abs(eigs).max()),
        max_real=float(eigs.real.max()),
        eigenvalues=tuple(eigs),
        scaled=tuple(scaled),
        inside_rk4=tuple(bool(b) for b in inside),
        dt=dt,
    )


def linear_operator(
    mesh: CutMesh,
    degree: int,
    params: StabilizationParams,
    beta: float = 1.0,
    bc: BoundaryCondition | None = None,
) -> SpatialOperator:
    """Convenience builder for the upwind advection operator."""
    return SpatialOperator(
        mesh,
        degree,
        NumericalFlux("upwind", advection(beta), beta=beta),
        params,
        bc or BoundaryCondition.periodic(),
    )


# -- exact solutions ---------------------------------------------------------


def burgers_preshock_exact(x, t: float, newton_tol: float = 1e-14):
    """Solution of u_t + (u^2/2)_x = 0 with u(x,0) = sin(pi x), valid t < 1/pi.

    Solves u = sin(pi (x - u t)) by damped Newton iteration (the root is
    unique before the shock forms).
    """
    if t >= 1.0 / np.pi:
        raise ValueError(f"characteristics cross at t = 1/pi; got t = {t}")
    x = np.asarray(x, dtype=float)
    u = np.sin(np.pi * x)
    for _ in range(200):
        g = u - np.sin(np.pi * (x - u * t))
        dg = 1.0 + np.pi * t * np.cos(np.pi * (x - u * t))
        du = g / dg
        # keep |u| <= 1 after each update (damping)
        u = np.clip(u - du, -1.0, 1.0)
        if np.max(np.abs(du)) < newton_tol:
            break
    return u


def riemann_shock_exact(x, t: float, u_left: float = 1.0, u_right: float = -0.5):
    """Entropy shock with speed (f(u_l) - f(u_r)) / (u_l - u_r)."""
    speed = 0.5 * (u_left + u_right)
    x = np.asarray(x, dtype=float)
    return np.where(x < speed * t, u_left, u_right)


def riemann_rarefaction_exact(x, t: float, u_left: float = -1.0, u_right: float = 1.0):
    """Rarefaction fan u = x/t between the characteristics of both states."""
    x = np.asarray(x, dtype=float)
    if t <= 0.0:
        return np.where(x <= 0.0, u_left, u_right)
    fan = x / t
    return np.clip(fan, u_left, u_right)


def square_wave(x, lo: float = 0.1, hi: float = 0.5):
    x = np.asarray(x, dtype=float)
    return np.where((x > lo) & (x < hi), 1.0, 0.0)


def periodic_advection_exact(u0: Callable, domain, beta: float = 1.0) -> Callable:
    """Exact profile u0 transported with wrap-around on the domain."""
    x_l, x_r = domain
    length = x_r - x_l

    def exact(x, t):
        shifted = np.mod(np.asarray(x, dtype=float) - x_l - beta * t, length) + x_l
        return u0(shifted)

    return exact


# -- convergence rates -------------------------------------------------------


def convergence_rates(
    errors: Sequence[float], hs: Sequence[float]
) -> tuple[list[float], float]:
    """Pairwise rates log(e_i/e_{i+1}) / log(h_i/h_{i+1}) and the
    least-squares average slope of log e against log h."""
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if errors.shape != hs.shape or errors.size < 2:
        raise ValueError("need matching error/h sequences with at least two entries")
    if np.any(errors == 0.0):
        pairwise = []
        for i in range(errors.size - 1):
            if errors[i] == 0.0 or errors[i + 1] == 0.0:
                pairwise.append(float("inf"))
            else:
                pairwise.append(
                    float(
                        np.log(errors[i] / errors[i + 1]) / np.log(hs[i] / hs[i + 1])
                    )
                )
        return pairwise, float("inf")
    pairwise = list(np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:]))
    slope = np.polyfit(np.log(hs), np.log(errors), 1)[0]
    return [float(p) for p in pairwise], float(slope)
