"""TVB minmod limiting and the piecewise-constant fallback on cut patches.

Limiting operates on background elements: the two pieces of an interior-cut
element share one polynomial basis and are treated as a single limiting
unit with the measure-weighted composite mean, while every other cell is
its own unit.  (Limiting the pieces independently feeds the fast sliver
mean into the neighbours' difference stencils and destabilizes the
penalty-coupled pair; the composite mean is the tame variable.)  Endpoint
offsets compare unit traces at the background element ends against
forward/backward differences of the unit means, get clipped by the minmod
function (skipped while |offset| <= M h^2), and the unit polynomial is
rebuilt keeping the composite mean exact.  Modes above quadratic are zeroed
when a unit is limited.

The modified cut limiting additionally collapses a flagged cut element and
its penalty-coupled neighbour to their means and advances that patch with
the piecewise-constant stabilized scheme, which removes the overshoots the
derivative jumps in the penalty trigger when a discontinuity passes a
small cut cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import CutMesh
from .operator import CellTables, SpatialOperator


@dataclass(frozen=True)
class LimiterConfig:
    mode: str  # "none" | "tvb" | "modified_cut"
    m: float = 0.0  # TVB constant

    def __post_init__(self):
        if self.mode not in ("none", "tvb", "modified_cut"):
            raise ValueError(f"unknown limiter mode {self.mode!r}")
        if self.m < 0:
            raise ValueError(f"TVB constant must be non-negative, got {self.m}")

    @staticmethod
    def none() -> "LimiterConfig":
        return LimiterConfig("none")

    @staticmethod
    def tvb(m: float = 0.0) -> "LimiterConfig":
        return LimiterConfig("tvb", m)

    @staticmethod
    def modified_cut(m: float = 0.0) -> "LimiterConfig":
        return LimiterConfig("modified_cut", m)


def _minmod_array(a1, a2, a3):
    s = np.sign(a1)
    same = (np.sign(a2) == s) & (np.sign(a3) == s) & (s != 0)
    mags = np.minimum(np.abs(a1), np.minimum(np.abs(a2), np.abs(a3)))
    return np.where(same, s * mags, 0.0)


def minmod(a1: float, a2: float, a3: float) -> float:
    """Common-sign minimum magnitude, zero on mixed signs."""
    return float(_minmod_array(np.float64(a1), np.float64(a2), np.float64(a3)))


def _tvb_minmod_array(a1, a2, a3, m: float, h: float):
    keep = np.abs(a1) <= m * h * h
    clipped = _minmod_array(a1, a2, a3)
    value = np.where(keep, a1, clipped)
    activated = ~keep & (value != a1)
    return value, activated


def tvb_minmod(a1: float, a2: float, a3: float, m: float, h: float):
    """Minmod with dead zone |a1| <= M h^2; returns (value, activated)."""
    value, activated = _tvb_minmod_array(
        np.float64(a1), np.float64(a2), np.float64(a3), m, h
    )
    return float(value), bool(activated)


class _LimiterTables:
    def __init__(self, mesh: CutMesh, degree: int):
        from . import basis

        tables = CellTables(mesh, degree, degree + 2)
        self.cell_mode_integrals = tables.mode_integrals
        self.cell_measures = tables.measures
        r1 = degree + 1

        # group consecutive cells sharing a background element into units
        units: list[list[int]] = []
        for i, cell in enumerate(mesh.cells):
            if units and (
                mesh.cells[units[-1][-1]].bg_left == cell.bg_left
                and mesh.cells[units[-1][-1]].bg_right == cell.bg_right
            ):
                units[-1].append(i)
            else:
                units.append([i])
        self.units = [tuple(u) for u in units]
        self.unit_of_cell = np.empty(mesh.n_cells, dtype=int)
        for k, u in enumerate(self.units):
            for i in u:
                self.unit_of_cell[i] = k
        n_units = len(self.units)
        self.n_units = n_units
        self.left_piece = np.array([u[0] for u in self.units])
        self.right_piece = np.array([u[-1] for u in self.units])
        self.unit_measures = np.array(
            [sum(tables.measures[i] for i in u) for u in self.units]
        )
        # with one shared basis per unit, summing the per-piece mode
        # integrals gives the integral over the union
        self.unit_mode_integrals = np.array(
            [sum(tables.mode_integrals[i] for i in u) for u in self.units]
        )
        self.ref_left = basis.eval_reference(degree, -1.0)
        self.ref_right = basis.eval_reference(degree, 1.0)

        self.stabilized_units = np.zeros(n_units, dtype=bool)
        for f in mesh.stabilized_faces:
            self.stabilized_units[self.unit_of_cell[f.left_cell]] = True
            self.stabilized_units[self.unit_of_cell[f.right_cell]] = True

        rl = min(degree, 2)
        self.recovery_order = rl
        if rl == 0:
            self.recovery_inv = None
            return
        mean_row = self.unit_mode_integrals[:, : rl + 1] / self.unit_measures[:, None]
        right_row = np.tile(self.ref_right[: rl + 1], (n_units, 1))
        left_row = np.tile(self.ref_left[: rl + 1], (n_units, 1))
        if rl == 1:
            systems = np.stack([mean_row, right_row], axis=1)
        else:
            systems = np.stack([mean_row, right_row, left_row], axis=1)
        # pinv: a boundary sliver's mean row nearly repeats an endpoint row;
        # the least-squares recovery stays bounded there, exact elsewhere
        self.recovery_inv = np.linalg.pinv(systems, rcond=1e-10)


@lru_cache(maxsize=64)
def _tables(mesh: CutMesh, degree: int) -> _LimiterTables:
    return _LimiterTables(mesh, degree)


def cell_means(u: np.ndarray, mesh: CutMesh, degree: int) -> np.ndarray:
    """Averages of u_h over the physical part of every cell."""
    t = _tables(mesh, degree)
    uc = np.asarray(u, dtype=float).reshape(mesh.n_cells, degree + 1)
    return np.einsum("mk,mk->m", uc, t.cell_mode_integrals) / t.cell_measures


def unit_means(u: np.ndarray, mesh: CutMesh, degree: int) -> np.ndarray:
    """Composite averages over background elements (cut pieces merged)."""
    t = _tables(mesh, degree)
    uc = np.asarray(u, dtype=float).reshape(mesh.n_cells, degree + 1)
    totals = np.zeros(t.n_units)
    np.add.at(
        totals,
        t.unit_of_cell,
        np.einsum("mk,mk->m", uc, t.cell_mode_integrals),
    )
    return totals / t.unit_measures


def apply_tvb(
    u: np.ndarray,
    mesh: CutMesh,
    degree: int,
    m: float = 0.0,
    periodic: bool = True,
    left_value: float | None = None,
    right_value: float | None = None,
    protect_stabilized: bool = True,
):
    """Limit endpoint offsets unit by unit; returns (limited U, troubled flags).

    Composite means are preserved exactly and untouched units keep their
    coefficients bit for bit; a limited interior-cut element leaves with one
    continuous polynomial across its two pieces.  The per-cell troubled
    flags mark every piece of a limited unit.  Without the periodic wrap,
    the exterior mean is the given boundary value when available, otherwise
    the edge unit's own mean.  Degree 0 is a no-op.

    Units adjacent to a stabilized face are flagged but, by default, not
    rewritten: per-stage reprojection there fights the jump-penalty
    coupling and ratchets the neighbouring means upward, while leaving the
    pair to its own (energy-stable) dynamics only yields the transient
    local overshoots that the modified cut limiting removes.
    """
    u = np.asarray(u, dtype=float)
    n = mesh.n_cells
    if degree == 0:
        return u.copy(), np.zeros(n, dtype=bool)
    t = _tables(mesh, degree)
    r1 = degree + 1
    uc = u.reshape(n, r1)
    ubar = unit_means(u, mesh, degree)
    u_right = uc[t.right_piece] @ t.ref_right
    u_left = uc[t.left_piece] @ t.ref_left
    utilde = u_right - ubar
    uttilde = ubar - u_left

    if periodic:
        nxt = np.roll(ubar, -1)
        prv = np.roll(ubar, 1)
    else:
        nxt = np.append(ubar[1:], right_value if right_value is not None else ubar[-1])
        prv = np.append(left_value if left_value is not None else ubar[0], ubar[:-1])
    dplus = nxt - ubar
    dminus = ubar - prv

    mod_t, act_t = _tvb_minmod_array(utilde, dplus, dminus, m, mesh.h)
    mod_tt, act_tt = _tvb_minmod_array(uttilde, dplus, dminus, m, mesh.h)
    troubled_units = act_t | act_tt

    out = u.copy()
    rewrite = troubled_units.copy()
    if protect_stabilized:
        rewrite &= ~t.stabilized_units
    if rewrite.any():
        idx = np.nonzero(rewrite)[0]
        if t.recovery_order == 1:
            rhs = np.stack([ubar[idx], ubar[idx] + mod_t[idx]], axis=1)
        else:
            rhs = np.stack(
                [ubar[idx], ubar[idx] + mod_t[idx], ubar[idx] - mod_tt[idx]], axis=1
            )
        coeffs = np.einsum("mij,mj->mi", t.recovery_inv[idx], rhs)
        blocks = np.zeros((len(idx), r1))
        blocks[:, : t.recovery_order + 1] = coeffs
        # the least-squares recovery may trade the mean away on sliver
        # units; pin it exactly through the mode-0 coefficient (weight 1)
        achieved = (
            np.einsum("mk,mk->m", blocks, t.unit_mode_integrals[idx])
            / t.unit_measures[idx]
        )
        blocks[:, 0] += ubar[idx] - achieved
        oc = out.reshape(n, r1)
        for row, k in enumerate(idx):
            for piece in t.units[k]:
                oc[piece] = blocks[row]
    return out, troubled_units[t.unit_of_cell]


def modified_cut_euler_step(
    op: SpatialOperator, u: np.ndarray, t: float, dt: float, m: float = 0.0
) -> np.ndarray:
    """One forward-Euler step with the piecewise-constant cut-patch fallback.

    The TVB limiter first acts on the current state and doubles as the
    troubled-cell indicator.  Every unit touching a stabilized face whose
    neighbourhood is flagged collapses to its composite mean; the global
    update then runs unchanged away from those patches, while the collapsed
    units advance through a small mass system (unit means coupled by the
    gamma_mass*h jump on the patch faces).  Piecewise-constant data reduces
    to the plain stabilized scheme because the indicator never fires.
    """
    u = np.asarray(u, dtype=float)
    mesh = op.mesh
    degree = op.degree
    r1 = degree + 1

    limited, troubled = apply_tvb(
        u,
        mesh,
        degree,
        m,
        periodic=op.bc.is_periodic,
        left_value=op.bc.left(t) if op.bc.left else None,
        right_value=op.bc.right(t) if op.bc.right else None,
    )
    flagged = [
        f
        for f in mesh.stabilized_faces
        if troubled[f.left_cell] or troubled[f.right_cell]
    ]
    if not flagged:
        return limited + dt * op.rhs(limited, t)

    tables = _tables(mesh, degree)
    means = unit_means(limited, mesh, degree)
    # connected components of units over the flagged faces
    patch_units = sorted(
        {tables.unit_of_cell[c] for f in flagged for c in (f.left_cell, f.right_cell)}
    )
    u_in = limited.copy()
    uc = u_in.reshape(mesh.n_cells, r1)
    for k in patch_units:
        for piece in tables.units[k]:
            uc[piece] = 0.0
            uc[piece, 0] = means[k]

    residual = op.residual(u_in, t)
    out = u_in + dt * op.solve_mass(residual)

    components = _unit_components(flagged, tables)
    gm = op.params.gamma_mass if op.params.enabled else 0.0
    h = mesh.h
    res_c = residual.reshape(mesh.n_cells, r1)
    for comp_units, comp_faces in components:
        pos = {k: i for i, k in enumerate(comp_units)}
        size = len(comp_units)
        mass = np.zeros((size, size))
        for i, k in enumerate(comp_units):
            mass[i, i] = tables.unit_measures[k]
        for f in comp_faces:
            il = pos[tables.unit_of_cell[f.left_cell]]
            ir = pos[tables.unit_of_cell[f.right_cell]]
            mass[il, il] += gm * h
            mass[ir, ir] += gm * h
            mass[il, ir] -= gm * h
            mass[ir, il] -= gm * h
        rhs = mass @ np.array([means[k] for k in comp_units])
        rhs += dt * np.array(
            [sum(res_c[piece, 0] for piece in tables.units[k]) for k in comp_units]
        )
        sol = np.linalg.solve(mass, rhs)
        oc = out.reshape(mesh.n_cells, r1)
        for k, val in zip(comp_units, sol):
            for piece in tables.units[k]:
                oc[piece] = 0.0
                oc[piece, 0] = val
    return out


def _unit_components(faces, tables):
    """Group flagged faces into connected patches of limiting units."""
    parent: dict[int, int] = {}

    def find(i):
        parent.setdefault(i, i)
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for f in faces:
        a = find(int(tables.unit_of_cell[f.left_cell]))
        b = find(int(tables.unit_of_cell[f.right_cell]))
        if a != b:
            parent[a] = b
    groups: dict[int, tuple[list[int], list]] = {}
    for f in faces:
        root = find(int(tables.unit_of_cell[f.left_cell]))
        groups.setdefault(root, ([], []))[1].append(f)
    for k in parent:
        root = find(k)
        if root in groups:
            groups[root][0].append(k)
    return [(sorted(set(units)), faces) for units, faces in groups.values()]
