"""Background meshes, cut configurations, and the set of stabilized faces.

A physical domain [x_l, x_r] is immersed in a background mesh of N equal
elements of width h.  Two cut settings are supported:

* boundary cut: the background mesh extends past x_l by (1-alpha)*h so the
  first element keeps only a physical part of length alpha*h, and
  h = (x_r - x_l) / (N - 1 + alpha);
* interior cuts: an interface point splits background element J into pieces
  of length alpha*h and (1-alpha)*h that share the full element as the
  support of their polynomial basis.

A background face is stabilized when it separates a cut cell of physical
size < 0.5*h from its neighbour across that face.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


class MeshError(ValueError):
    """Invalid mesh construction parameters."""


@dataclass(frozen=True)
class NoCut:
    """Fitted uniform mesh; background and physical domains coincide."""


@dataclass(frozen=True)
class BoundaryCut:
    """The left domain boundary cuts the first element to size alpha*h."""

    alpha: float


@dataclass(frozen=True)
class InteriorCuts:
    """Interface points splitting interior elements; (1-based index, alpha) pairs."""

    cuts: tuple[tuple[int, float], ...]


CutSpec = Union[NoCut, BoundaryCut, InteriorCuts]


@dataclass(frozen=True)
class Cell:
    """One cell: a physical sub-interval of a background element."""

    bg_left: float
    bg_right: float
    left: float
    right: float
    is_cut: bool
    fraction: float  # physical length / h

    @property
    def center(self) -> float:
        """Center of the background element (basis map origin)."""
        return 0.5 * (self.bg_left + self.bg_right)

    @property
    def width(self) -> float:
        """Width of the background element."""
        return self.bg_right - self.bg_left

    @property
    def length(self) -> float:
        """Length of the physical sub-interval."""
        return self.right - self.left


@dataclass(frozen=True)
class Face:
    """Interior face between two consecutive cells."""

    index: int
    x: float
    left_cell: int
    right_cell: int


@dataclass(frozen=True)
class CutMesh:
    x_left: float
    x_right: float
    h: float
    cells: tuple[Cell, ...]
    faces: tuple[Face, ...]
    stabilized_faces: tuple[Face, ...]

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def domain(self) -> tuple[float, float]:
        return (self.x_left, self.x_right)

    def cell_lengths(self) -> np.ndarray:
        return np.array([c.length for c in self.cells])


def _validate_interior(spec: InteriorCuts, n_cells: int) -> None:
    seen = set()
    for j, alpha in spec.cuts:
        if not 2 <= j <= n_cells - 1:
            raise MeshError(
                f"interior cut index {j} must be in [2, {n_cells - 1}] "
                "(cuts in the first or last element are rejected)"
            )
        if j in seen:
            raise MeshError(f"duplicate interior cut index {j}")
        seen.add(j)
        if not 0.0 < alpha < 1.0:
            raise MeshError(f"interior cut fraction must be in (0, 1), got {alpha}")


def build_mesh(domain, n_cells: int, spec: CutSpec = NoCut()) -> CutMesh:
    """Construct the cut mesh for a physical domain [x_l, x_r].

    BoundaryCut(alpha) yields N cells on the background [x_l-(1-alpha)h, x_r]
    with the first cell physical on [x_l, x_l+alpha*h]; alpha = 1 reduces to
    the uncut mesh exactly.  InteriorCuts split the listed elements, both
    pieces keeping the full element as their background interval.
    """
    x_l, x_r = (float(domain[0]), float(domain[1]))
    if not x_r > x_l:
        raise MeshError(f"empty domain [{x_l}, {x_r}]")
    if n_cells < 3:
        raise MeshError(f"need at least 3 background elements, got {n_cells}")

    if isinstance(spec, BoundaryCut):
        alpha = float(spec.alpha)
        if not 0.0 < alpha <= 1.0:
            raise MeshError(f"boundary cut fraction must be in (0, 1], got {alpha}")
        if alpha == 1.0:
            spec = NoCut()

    if isinstance(spec, NoCut):
        h = (x_r - x_l) / n_cells
        edges = np.linspace(x_l, x_r, n_cells + 1)
        cells = tuple(
            Cell(edges[i], edges[i + 1], edges[i], edges[i + 1], False, 1.0)
            for i in range(n_cells)
        )
        faces = _interior_faces(cells)
        return CutMesh(x_l, x_r, h, cells, faces, ())

    if isinstance(spec, BoundaryCut):
        alpha = float(spec.alpha)
        h = (x_r - x_l) / (n_cells - 1 + alpha)
        edges = np.linspace(x_l - (1.0 - alpha) * h, x_r, n_cells + 1)
        cells = [Cell(edges[0], edges[1], x_l, edges[1], True, alpha)]
        cells += [
            Cell(edges[i], edges[i + 1], edges[i], edges[i + 1], False, 1.0)
            for i in range(1, n_cells)
        ]
        cells = tuple(cells)
        faces = _interior_faces(cells)
        stabilized = (faces[0],) if alpha < 0.5 else ()
        return CutMesh(x_l, x_r, h, cells, faces, stabilized)

    if isinstance(spec, InteriorCuts):
        _validate_interior(spec, n_cells)
        by_element = {j: float(a) for j, a in spec.cuts}
        h = (x_r - x_l) / n_cells
        edges = np.linspace(x_l, x_r, n_cells + 1)
        cells: list[Cell] = []
        # map: background element (1-based) -> index of its first cell
        first_cell_of = {}
        for j in range(1, n_cells + 1):
            a_bg, b_bg = edges[j - 1], edges[j]
            first_cell_of[j] = len(cells)
            if j in by_element:
                alpha = by_element[j]
                x_p = a_bg + alpha * h
                cells.append(Cell(a_bg, b_bg, a_bg, x_p, True, alpha))
                cells.append(Cell(a_bg, b_bg, x_p, b_bg, True, 1.0 - alpha))
            else:
                cells.append(Cell(a_bg, b_bg, a_bg, b_bg, False, 1.0))
        cells = tuple(cells)
        faces = _interior_faces(cells)
        stabilized = []
        for j, alpha in sorted(by_element.items()):
            i0 = first_cell_of[j]
            if alpha < 0.5:
                stabilized.append(faces[i0 - 1])  # face at the element's left edge
            elif alpha > 0.5:
                stabilized.append(faces[i0 + 1])  # face at the element's right edge
        return CutMesh(x_l, x_r, h, cells, faces, tuple(stabilized))

    raise MeshError(f"unknown cut specification {spec!r}")


def _interior_faces(cells: tuple[Cell, ...]) -> tuple[Face, ...]:
    return tuple(
        Face(i, cells[i].right, i, i + 1) for i in range(len(cells) - 1)
    )
