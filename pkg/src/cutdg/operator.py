"""Assembly and application of the stabilized semi-discrete operator.

The scheme evolves modal coefficients U (cell-major, degree+1 modes per
cell) through

    M~ U_t = R(U),

where M~ is the mass matrix plus the gamma_mass-scaled J_1 face penalty and
R collects the numerical-flux surface terms, the flux volume term, and the
gamma_stiffness-scaled J_0 penalty.  For linear advection with periodic
boundaries the right side is also available as an explicit matrix S~ with
R(U) = S~ U.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import basis, linalg
from .flux import NumericalFlux
from .mesh import CutMesh
from .stabilization import (
    StabilizationParams,
    penalty_face_block,
    penalty_matrix,
    _patch_indices,
)


@dataclass(frozen=True)
class BoundaryCondition:
    """Periodic wrap or per-side exterior states for the boundary fluxes.

    A side with a callable supplies the exterior trace g(t) (inflow); a side
    left as None copies the interior trace (outflow).
    """

    kind: str  # "periodic" | "dirichlet"
    left: Optional[Callable] = None
    right: Optional[Callable] = None

    @staticmethod
    def periodic() -> "BoundaryCondition":
        return BoundaryCondition("periodic")

    @staticmethod
    def inflow_left(g: Callable) -> "BoundaryCondition":
        """Inflow data g(t) at x_l, outflow at x_r."""
        return BoundaryCondition("dirichlet", left=g)

    @staticmethod
    def dirichlet(left=None, right=None) -> "BoundaryCondition":
        to_fn = lambda v: (lambda t, v=float(v): v) if np.isscalar(v) else v
        return BoundaryCondition(
            "dirichlet",
            left=None if left is None else to_fn(left),
            right=None if right is None else to_fn(right),
        )

    @property
    def is_periodic(self) -> bool:
        return self.kind == "periodic"


def n_dofs(mesh: CutMesh, degree: int) -> int:
    return mesh.n_cells * (degree + 1)


class CellTables:
    """Per-cell quadrature and trace tables shared by assembly and residuals."""

    def __init__(self, mesh: CutMesh, degree: int, n_quad: int):
        cells = mesh.cells
        m = len(cells)
        r1 = degree + 1
        rule = basis.gauss_legendre(n_quad)
        nodes = np.asarray(rule.nodes)
        weights = np.asarray(rule.weights)

        lefts = np.array([c.left for c in cells])
        rights = np.array([c.right for c in cells])
        centers = np.array([c.center for c in cells])
        widths = np.array([c.width for c in cells])
        half = 0.5 * (rights - lefts)
        mid = 0.5 * (rights + lefts)

        x = mid[:, None] + half[:, None] * nodes[None, :]
        xi = (x - centers[:, None]) / (0.5 * widths[:, None])
        self.weights = weights[None, :] * half[:, None]  # (m, q)
        self.phi = basis.eval_reference(degree, xi)  # (m, q, r1)
        self.dphi = basis.eval_reference(degree, xi, 1) * (
            2.0 / widths[:, None, None]
        )
        self.trace_left = basis.eval_reference(
            degree, (lefts - centers) / (0.5 * widths)
        )  # (m, r1)
        self.trace_right = basis.eval_reference(
            degree, (rights - centers) / (0.5 * widths)
        )
        self.measures = rights - lefts
        # integral of each mode over the physical part; row / measure = cell mean
        self.mode_integrals = np.einsum("mq,mqk->mk", self.weights, self.phi)
        # orthogonality makes the k >= 1 integrals of uncut cells exactly
        # zero; pinning them (and the k = 0 value) removes quadrature noise
        # from mass bookkeeping
        uncut = np.array([not c.is_cut for c in cells])
        if uncut.any():
            self.mode_integrals[uncut] = 0.0
            self.mode_integrals[uncut, 0] = self.measures[uncut]
        self.n_cells = m
        self.degree = degree
        self.r1 = r1


def local_mass_block(mesh: CutMesh, cell_index: int, degree: int) -> np.ndarray:
    """Mass block of one cell over its physical part.

    Uncut cells use the closed-form diagonal h/2 * ||phi_k||^2; cut cells are
    integrated exactly by Gauss quadrature with degree+2 points.
    """
    cell = mesh.cells[cell_index]
    if cell.length <= 0.0:
        raise ValueError(f"cell {cell_index} has a degenerate physical interval")
    if not cell.is_cut:
        return np.diag(0.5 * cell.width * np.asarray(basis.reference_norms(degree)))
    rule = basis.gauss_legendre(degree + 2)
    nodes = np.asarray(rule.nodes)
    weights = np.asarray(rule.weights)
    half = 0.5 * cell.length
    x = 0.5 * (cell.left + cell.right) + half * nodes
    xi = (x - cell.center) / (0.5 * cell.width)
    phi = basis.eval_reference(degree, xi)  # (q, r1)
    return (phi * (half * weights)[:, None]).T @ phi


def assemble_mass(
    mesh: CutMesh, degree: int, params: StabilizationParams
) -> np.ndarray:
    """Stabilized mass matrix: cell mass blocks plus gamma_mass * J_1 couplings."""
    r1 = degree + 1
    nd = n_dofs(mesh, degree)
    out = np.zeros((nd, nd))
    for i in range(mesh.n_cells):
        out[i * r1 : (i + 1) * r1, i * r1 : (i + 1) * r1] = local_mass_block(
            mesh, i, degree
        )
    if params.enabled and params.gamma_mass > 0.0:
        out += params.gamma_mass * penalty_matrix(mesh, degree, 1, params)
    return out


def assemble_linear_stiffness(
    mesh: CutMesh,
    degree: int,
    beta: float,
    params: StabilizationParams,
    bc: BoundaryCondition,
) -> np.ndarray:
    """Explicit S~ for periodic linear advection with the upwind flux.

    S~ U = -a(u_h, v_h) - gamma_stiffness * J_0(u_h, v_h); rows follow the
    cell-major coefficient layout.
    """
    if not bc.is_periodic:
        raise ValueError("explicit stiffness assembly covers the periodic case only")
    if beta <= 0:
        raise ValueError(f"upwind assembly assumes beta > 0, got {beta}")
    r1 = degree + 1
    nd = n_dofs(mesh, degree)
    tables = CellTables(mesh, degree, degree + 2)
    a_mat = np.zeros((nd, nd))

    for i in range(mesh.n_cells):
        rows = slice(i * r1, (i + 1) * r1)
        vol = np.einsum(
            "qk,qm->km", tables.dphi[i] * tables.weights[i][:, None], tables.phi[i]
        )
        a_mat[rows, rows] -= beta * vol

    # every face (including the periodic wrap) contributes
    # fhat (v^- - v^+) with fhat = beta * (left trace of u)
    pairs = [(f.left_cell, f.right_cell) for f in mesh.faces]
    pairs.append((mesh.n_cells - 1, 0))
    for lc, rc in pairs:
        lcols = slice(lc * r1, (lc + 1) * r1)
        lrows = lcols
        rrows = slice(rc * r1, (rc + 1) * r1)
        a_mat[lrows, lcols] += beta * np.outer(
            tables.trace_right[lc], tables.trace_right[lc]
        )
        a_mat[rrows, lcols] -= beta * np.outer(
            tables.trace_left[rc], tables.trace_right[lc]
        )

    s_mat = -a_mat
    if params.enabled and params.gamma_stiffness > 0.0:
        s_mat -= params.gamma_stiffness * penalty_matrix(mesh, degree, 0, params)
    return s_mat


class MassSolver:
    """Block solver for M~: diagonal on plain cells, small dense systems on
    cut cells and penalty-coupled patches."""

    def __init__(self, mesh: CutMesh, degree: int, params: StabilizationParams):
        r1 = degree + 1
        coupled = params.enabled and params.gamma_mass > 0.0
        components = _coupling_components(mesh, coupled)

        plain: list[int] = []
        groups: dict[int, list[tuple[np.ndarray, np.ndarray]]] = {}
        for comp in components:
            if len(comp) == 1 and not mesh.cells[comp[0]].is_cut:
                plain.append(comp[0])
                continue
            block = _component_block(mesh, degree, params, comp, coupled)
            idx = np.concatenate([np.arange(c * r1, (c + 1) * r1) for c in comp])
            groups.setdefault(len(comp), []).append((block, idx))

        self.r1 = r1
        self.plain = np.array(plain, dtype=int)
        self.plain_diag = (
            np.array(
                [np.diag(local_mass_block(mesh, i, degree)) for i in self.plain]
            )
            if len(plain)
            else np.zeros((0, r1))
        )
        self.groups = []
        for items in groups.values():
            blocks = np.stack([b for b, _ in items])
            indices = np.stack([ix for _, ix in items])
            self.groups.append((blocks, indices, blocks.astype(np.longdouble)))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        out = np.empty_like(rhs)
        r1 = self.r1
        if len(self.plain):
            rows = rhs.reshape(-1, r1)[self.plain]
            out.reshape(-1, r1)[self.plain] = rows / self.plain_diag
        for blocks, indices, blocks_ld in self.groups:
            b = rhs[indices]
            x = np.linalg.solve(blocks, b[:, :, None])[:, :, 0]
            # refinement with the residual in extended precision: cut-cell
            # blocks carry the full mass condition number, and a residual
            # formed in double would stall at eps*||M||*||x||, leaking a
            # small but coherent conservation error every stage
            resid = b - np.einsum("pij,pj->pi", blocks_ld, x.astype(np.longdouble))
            x += np.linalg.solve(blocks, resid.astype(float)[:, :, None])[:, :, 0]
            out[indices] = x
        return out


def _coupling_components(mesh: CutMesh, coupled: bool) -> list[list[int]]:
    """Connected components of cells under the stabilized-face coupling."""
    parent = list(range(mesh.n_cells))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if coupled:
        for face in mesh.stabilized_faces:
            a, b = find(face.left_cell), find(face.right_cell)
            if a != b:
                parent[a] = b
    comps: dict[int, list[int]] = {}
    for i in range(mesh.n_cells):
        comps.setdefault(find(i), []).append(i)
    return [sorted(c) for c in comps.values()]


def _component_block(
    mesh: CutMesh,
    degree: int,
    params: StabilizationParams,
    comp: list[int],
    coupled: bool,
) -> np.ndarray:
    r1 = degree + 1
    pos = {c: k for k, c in enumerate(comp)}
    block = np.zeros((len(comp) * r1, len(comp) * r1))
    for c in comp:
        k = pos[c]
        block[k * r1 : (k + 1) * r1, k * r1 : (k + 1) * r1] = local_mass_block(
            mesh, c, degree
        )
    if coupled:
        for face in mesh.stabilized_faces:
            if face.left_cell in pos and face.right_cell in pos:
                fb = params.gamma_mass * penalty_face_block(
                    face, degree, 1, params, mesh
                )
                il = pos[face.left_cell]
                ir = pos[face.right_cell]
                loc = np.concatenate(
                    [np.arange(il * r1, (il + 1) * r1), np.arange(ir * r1, (ir + 1) * r1)]
                )
                block[np.ix_(loc, loc)] += fb
    return block


class SpatialOperator:
    """Precomputed stabilized operator for one (mesh, degree, flux, bc) setup."""

    def __init__(
        self,
        mesh: CutMesh,
        degree: int,
        num_flux: NumericalFlux,
        params: StabilizationParams,
        bc: BoundaryCondition,
        n_quad: int | None = None,
    ):
        if n_quad is None:
            # exact for (f(u_h), v_x) with f linear; 2r+2 covers quadratic f
            n_quad = degree + 2 if num_flux.is_linear else 2 * degree + 2
        self.mesh = mesh
        self.degree = degree
        self.num_flux = num_flux
        self.params = params
        self.bc = bc
        self.tables = CellTables(mesh, degree, n_quad)
        self.mass = assemble_mass(mesh, degree, params)
        self._solver = MassSolver(mesh, degree, params)
        self._stiffness: np.ndarray | None = None

        if params.enabled and params.gamma_stiffness > 0.0 and mesh.stabilized_faces:
            blocks = [
                penalty_face_block(f, degree, 0, params, mesh)
                for f in mesh.stabilized_faces
            ]
            idx = [_patch_indices(f, degree) for f in mesh.stabilized_faces]
            self._penalty0 = (np.stack(blocks), np.stack(idx))
        else:
            self._penalty0 = None

        m = mesh.n_cells
        # face -> cell maps for scattering flux values: interior faces are
        # shared; the boundary contributes one extra flux value per side.
        self._left_face_of = np.arange(m) - 1  # face index left of cell i
        self._right_face_of = np.arange(m)  # face index right of cell i
        # flux array layout: [f_boundary_left, f_interior..., f_boundary_right]
        # realized by shifting indices by one
        self._left_face_of += 1
        self._right_face_of += 1

    # -- residual ---------------------------------------------------------

    def residual(self, u: np.ndarray, t: float = 0.0) -> np.ndarray:
        """R(U) with M~ U_t = R(U); traces taken at physical cell endpoints."""
        u = np.asarray(u, dtype=float)
        if u.size != n_dofs(self.mesh, self.degree):
            raise ValueError(
                f"expected {n_dofs(self.mesh, self.degree)} coefficients, got {u.size}"
            )
        if np.isnan(u).any():
            raise FloatingPointError("NaN in coefficient vector")
        t_ = self.tables
        uc = u.reshape(t_.n_cells, t_.r1)

        left_traces = np.einsum("mk,mk->m", uc, t_.trace_left)
        right_traces = np.einsum("mk,mk->m", uc, t_.trace_right)

        u_minus = np.empty(t_.n_cells + 1)
        u_plus = np.empty(t_.n_cells + 1)
        u_minus[1:] = right_traces
        u_plus[:-1] = left_traces
        if self.bc.is_periodic:
            u_minus[0] = right_traces[-1]
            u_plus[-1] = left_traces[0]
        else:
            u_minus[0] = self.bc.left(t) if self.bc.left else left_traces[0]
            u_plus[-1] = self.bc.right(t) if self.bc.right else right_traces[-1]

        fhat = np.asarray(self.num_flux(u_minus, u_plus), dtype=float)

        u_q = np.einsum("mqk,mk->mq", t_.phi, uc)
        f_q = self.num_flux.physical.f(u_q)
        volume = np.einsum("mq,mqk->mk", f_q * t_.weights, t_.dphi)

        r = volume - (
            fhat[self._right_face_of, None] * t_.trace_right
            - fhat[self._left_face_of, None] * t_.trace_left
        )
        r = r.ravel()

        if self._penalty0 is not None:
            blocks, idx = self._penalty0
            contrib = np.einsum("fij,fj->fi", blocks, u[idx])
            np.subtract.at(r, idx, self.params.gamma_stiffness * contrib)
        return r

    # -- mass solves and energy -------------------------------------------

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        return self._solver.solve(np.asarray(rhs, dtype=float))

    def rhs(self, u: np.ndarray, t: float = 0.0) -> np.ndarray:
        return self.solve_mass(self.residual(u, t))

    def apply_mass(self, u: np.ndarray) -> np.ndarray:
        return self.mass @ np.asarray(u, dtype=float)

    def energy(self, u: np.ndarray) -> float:
        """||u_h||^2 over the physical domain plus gamma_mass * J_1(u_h, u_h)."""
        u = np.asarray(u, dtype=float)
        return float(u @ self.mass @ u)

    def total_integral(self, u: np.ndarray) -> float:
        """Integral of u_h over the physical domain."""
        uc = np.asarray(u, dtype=float).reshape(self.tables.n_cells, self.tables.r1)
        return float(np.einsum("mk,mk->", uc, self.tables.mode_integrals))

    def cell_means(self, u: np.ndarray) -> np.ndarray:
        uc = np.asarray(u, dtype=float).reshape(self.tables.n_cells, self.tables.r1)
        return np.einsum("mk,mk->m", uc, self.tables.mode_integrals) / self.tables.measures

    def linear_matrix(self) -> np.ndarray:
        """Explicit S~ (linear advection, periodic boundary condition only)."""
        if self._stiffness is None:
            if not (self.num_flux.is_linear and self.num_flux.name == "upwind"):
                raise ValueError("explicit stiffness requires the linear upwind flux")
            self._stiffness = assemble_linear_stiffness(
                self.mesh, self.degree, self.num_flux.beta, self.params, self.bc
            )
        return self._stiffness


def solve_mass(factorization, rhs: np.ndarray) -> np.ndarray:
    """Solve M~ x = rhs given an LU factorization of M~ (or a MassSolver)."""
    if isinstance(factorization, MassSolver):
        return factorization.solve(rhs)
    return linalg.lu_solve_factored(factorization, rhs)
