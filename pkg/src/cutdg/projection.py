"""Initialization of discrete solutions by (stabilized) L2 projection."""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np

from . import basis
from .linalg import SingularMatrixError
from .mesh import CutMesh
from .operator import MassSolver, local_mass_block, n_dofs
from .stabilization import StabilizationParams

ILL_CONDITIONED = 1e12


def _moment_vector(u0: Callable, mesh: CutMesh, degree: int, n_quad: int) -> np.ndarray:
    rule = basis.gauss_legendre(n_quad)
    nodes = np.asarray(rule.nodes)
    weights = np.asarray(rule.weights)
    out = np.empty((mesh.n_cells, degree + 1))
    for i, cell in enumerate(mesh.cells):
        half = 0.5 * cell.length
        x = 0.5 * (cell.left + cell.right) + half * nodes
        xi = (x - cell.center) / (0.5 * cell.width)
        phi = basis.eval_reference(degree, xi)
        out[i] = (half * weights * np.asarray(u0(x), dtype=float)) @ phi
    return out


def l2_project(
    u0: Callable, mesh: CutMesh, degree: int, n_quad: int | None = None
) -> np.ndarray:
    """Cell-by-cell L2 projection over the physical sub-intervals.

    The local blocks of tiny cut cells are nearly singular; a warning is
    issued when a block's condition number exceeds 1e12.
    """
    n_quad = n_quad or max(degree + 2, 8)
    moments = _moment_vector(u0, mesh, degree, n_quad)
    out = np.empty(n_dofs(mesh, degree))
    r1 = degree + 1
    for i in range(mesh.n_cells):
        block = local_mass_block(mesh, i, degree)
        if degree > 0:
            cond = np.linalg.cond(block)
            if cond > ILL_CONDITIONED:
                warnings.warn(
                    f"projection block on cell {i} has condition {cond:.2e}; "
                    "consider the stabilized projection",
                    stacklevel=2,
                )
        try:
            out[i * r1 : (i + 1) * r1] = np.linalg.solve(block, moments[i])
        except np.linalg.LinAlgError as err:
            raise SingularMatrixError(
                f"projection block on cell {i} is singular to working precision"
            ) from err
    return out


def stabilized_l2_project(
    u0: Callable,
    mesh: CutMesh,
    degree: int,
    params: StabilizationParams,
    n_quad: int | None = None,
) -> np.ndarray:
    """Projection through the stabilized mass matrix M~ U = (u0, phi).

    Well conditioned uniformly in the cut size for gamma_mass > 0; on
    meshes without stabilized faces it coincides with the plain projection.
    """
    if params.enabled and params.gamma_mass <= 0.0:
        raise ValueError("stabilized projection needs gamma_mass > 0")
    n_quad = n_quad or max(degree + 2, 8)
    moments = _moment_vector(u0, mesh, degree, n_quad).ravel()
    solver = MassSolver(mesh, degree, params)
    return solver.solve(moments)
