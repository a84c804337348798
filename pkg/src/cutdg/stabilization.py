"""Jump-penalty bilinear forms acting across stabilized faces.

The penalty of exponent s couples the two cells adjacent to each stabilized
face F through jumps of all derivatives up to the polynomial degree:

    J_s(u, v) = sum_F sum_{k=0..r} w_k h^{2k+s} [d^k u]_F [d^k v]_F,

with weights w_k = 1 / (k!)^2 and x-derivatives in the jumps.  Face values
are taken by polynomial extension from each side's background element.
J_1 stabilizes the mass matrix and J_0 the stiffness matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import basis
from .mesh import CutMesh, Face


@dataclass(frozen=True)
class StabilizationParams:
    """Penalty strengths: gamma_mass scales J_1, gamma_stiffness scales J_0."""

    gamma_mass: float = 0.25
    gamma_stiffness: float = 0.75
    enabled: bool = True

    def __post_init__(self):
        if self.gamma_mass < 0 or self.gamma_stiffness < 0:
            raise ValueError("penalty coefficients must be non-negative")

    @staticmethod
    def weight(k: int) -> float:
        return 1.0 / math.factorial(k) ** 2

    @staticmethod
    def weights(degree: int) -> np.ndarray:
        return np.array([StabilizationParams.weight(k) for k in range(degree + 1)])

    def disabled(self) -> "StabilizationParams":
        return StabilizationParams(self.gamma_mass, self.gamma_stiffness, False)


def face_jump_vectors(face: Face, degree: int, mesh: CutMesh) -> np.ndarray:
    """Signed derivative traces g_m with [d^m v]_F = g_m . (u_left, u_right).

    Returns shape (degree+1, 2*(degree+1)); row m holds -d^m phi_k from the
    left cell followed by +d^m phi_k from the right cell, evaluated at the
    face (chain-rule factors included).
    """
    lc = mesh.cells[face.left_cell]
    rc = mesh.cells[face.right_cell]
    g = np.empty((degree + 1, 2 * (degree + 1)))
    for m in range(degree + 1):
        xi_l = (face.x - lc.center) / (0.5 * lc.width)
        xi_r = (face.x - rc.center) / (0.5 * rc.width)
        left = basis.eval_reference(degree, xi_l, m) * (2.0 / lc.width) ** m
        right = basis.eval_reference(degree, xi_r, m) * (2.0 / rc.width) ** m
        g[m, : degree + 1] = -left
        g[m, degree + 1 :] = right
    return g


def penalty_face_block(
    face: Face, degree: int, s: int, params: StabilizationParams, mesh: CutMesh
) -> np.ndarray:
    """Symmetric PSD block of J_s on one face, ordered (left cell, right cell).

    B = sum_m w_m h^(2m+s) g_m g_m^T without the gamma factor; the caller
    scales by gamma_mass or gamma_stiffness.
    """
    if s not in (0, 1):
        raise ValueError(f"penalty exponent must be 0 or 1, got {s}")
    if face not in mesh.stabilized_faces:
        raise ValueError(f"face at x={face.x} is not stabilized")
    g = face_jump_vectors(face, degree, mesh)
    h = mesh.h
    block = np.zeros((2 * (degree + 1), 2 * (degree + 1)))
    for m in range(degree + 1):
        block += params.weight(m) * h ** (2 * m + s) * np.outer(g[m], g[m])
    return block


def penalty_matrix(
    mesh: CutMesh, degree: int, s: int, params: StabilizationParams
) -> np.ndarray:
    """Global penalty matrix of J_s (face blocks scattered, no gamma factor)."""
    nd = mesh.n_cells * (degree + 1)
    out = np.zeros((nd, nd))
    for face in mesh.stabilized_faces:
        block = penalty_face_block(face, degree, s, params, mesh)
        idx = _patch_indices(face, degree)
        out[np.ix_(idx, idx)] += block
    return out


def penalty_quadratic(
    u: np.ndarray, s: int, params: StabilizationParams, mesh: CutMesh
) -> float:
    """J_s(u_h, u_h) >= 0 for the coefficient vector u (cell-major layout)."""
    u = np.asarray(u, dtype=float)
    if u.size % mesh.n_cells:
        raise ValueError(
            f"coefficient vector of size {u.size} does not fit {mesh.n_cells} cells"
        )
    degree = u.size // mesh.n_cells - 1
    total = 0.0
    for face in mesh.stabilized_faces:
        block = penalty_face_block(face, degree, s, params, mesh)
        w = u[_patch_indices(face, degree)]
        total += float(w @ block @ w)
    return total


def _patch_indices(face: Face, degree: int) -> np.ndarray:
    r1 = degree + 1
    return np.concatenate(
        [
            np.arange(face.left_cell * r1, (face.left_cell + 1) * r1),
            np.arange(face.right_cell * r1, (face.right_cell + 1) * r1),
        ]
    )
