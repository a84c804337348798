"""Benchmark problem definitions and mesh construction helpers.

The `multi` cut mode reproduces the randomized meshes of the nonlinear
experiments: every background element inside the problem's cut window is
split at the fraction alpha_k = s_k * alpha, where the s_k are uniform in
[0.01, 1] and come from the SplitMix64 stream documented below, so runs are
reproducible from the seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import analysis
from .flux import FluxFunction, NumericalFlux, advection, burgers
from .mesh import BoundaryCut, CutMesh, CutSpec, InteriorCuts, MeshError, NoCut, build_mesh
from .operator import BoundaryCondition
from .stabilization import StabilizationParams

_MASK = 0xFFFFFFFFFFFFFFFF


def splitmix64_stream(seed: int):
    """SplitMix64: state += 0x9E3779B97F4A7C15; z = state;
    z = (z ^ z>>30) * 0xBF58476D1CE4E5B9; z = (z ^ z>>27) * 0x94D049BB133111EB;
    yield z ^ z>>31.  Uniform doubles use the top 53 bits / 2^53."""
    state = seed & _MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        yield z ^ (z >> 31)


def random_fractions(seed: int, count: int, lo: float = 0.01, hi: float = 1.0):
    """count uniform draws in [lo, hi] from the SplitMix64 stream."""
    stream = splitmix64_stream(seed)
    out = np.empty(count)
    for i in range(count):
        u = (next(stream) >> 11) * 2.0**-53
        out[i] = lo + (hi - lo) * u
    return out


@dataclass(frozen=True)
class Problem:
    """One benchmark scenario: equation, data, boundaries, and defaults."""

    name: str
    domain: tuple[float, float]
    flux: Callable[[], FluxFunction]
    default_flux: str
    beta: float
    initial: Callable
    bc: Callable[[], BoundaryCondition]
    exact: Optional[Callable]  # (x, t) -> u, when known
    default_courant: dict[int, float]
    default_t_final: float
    cut_window: Optional[tuple[float, float]]
    default_cut_mode: str


def _nonsmooth_bc_data(t):
    t = np.asarray(t, dtype=float)
    return np.where(t <= 1.0, 0.0, -1.0)


def _gamma_default() -> StabilizationParams:
    return StabilizationParams()


_CONV_CFL = {0: 0.5, 1: 0.3, 2: 0.2, 3: 0.14}
_BURGERS_CFL = {
    0: 1e-4 + 0.25 / 1.25,
    1: 0.3,
    2: 0.2,
    3: 0.1,
}

PROBLEMS: dict[str, Problem] = {}


def _register(problem: Problem) -> Problem:
    PROBLEMS[problem.name] = problem
    return problem


_register(
    Problem(
        name="linear_advection",
        domain=(0.0, 2.0),
        flux=advection,
        default_flux="upwind",
        beta=1.0,
        initial=lambda x: 1.0 + 0.5 * np.sin(np.pi * np.asarray(x, dtype=float)),
        bc=BoundaryCondition.periodic,
        exact=lambda x, t: 1.0 + 0.5 * np.sin(np.pi * (np.asarray(x, dtype=float) - t)),
        default_courant=_CONV_CFL,
        default_t_final=1.0,
        cut_window=None,
        default_cut_mode="boundary",
    )
)

_register(
    Problem(
        name="linear_nonsmooth_initial",
        domain=(0.0, 1.0),
        flux=advection,
        default_flux="upwind",
        beta=1.0,
        initial=lambda x: analysis.square_wave(x, 0.1, 0.5),
        bc=BoundaryCondition.periodic,
        exact=lambda x, t: analysis.periodic_advection_exact(
            lambda y: analysis.square_wave(y, 0.1, 0.5), (0.0, 1.0)
        )(x, t),
        default_courant={0: 0.2, 1: 0.3, 2: 0.2, 3: 0.14},
        default_t_final=0.3,
        cut_window=None,
        default_cut_mode="interior",
    )
)

_register(
    Problem(
        name="linear_nonsmooth_bc",
        domain=(0.0, 2.0),
        flux=advection,
        default_flux="lax_friedrichs",
        beta=1.0,
        initial=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        bc=lambda: BoundaryCondition.inflow_left(_nonsmooth_bc_data),
        exact=lambda x, t: _nonsmooth_bc_data(t - np.asarray(x, dtype=float))
        * (np.asarray(x, dtype=float) <= t),
        default_courant={r: 0.2 for r in range(5)},
        default_t_final=1.5,
        cut_window=None,
        default_cut_mode="boundary",
    )
)

_register(
    Problem(
        name="burgers_smooth",
        domain=(0.0, 2.0),
        flux=burgers,
        default_flux="godunov",
        beta=1.0,
        initial=lambda x: np.sin(np.pi * np.asarray(x, dtype=float)),
        bc=BoundaryCondition.periodic,
        exact=lambda x, t: analysis.burgers_preshock_exact(x, t),
        default_courant=_BURGERS_CFL,
        default_t_final=0.2,
        cut_window=(0.75, 1.25),
        default_cut_mode="multi",
    )
)

_register(
    Problem(
        name="burgers_riemann_rarefaction",
        domain=(-1.0, 1.0),
        flux=burgers,
        default_flux="godunov",
        beta=1.0,
        initial=lambda x: np.where(np.asarray(x, dtype=float) <= 0.0, -1.0, 1.0),
        bc=lambda: BoundaryCondition.dirichlet(left=None, right=1.0),
        exact=lambda x, t: analysis.riemann_rarefaction_exact(x, t, -1.0, 1.0),
        default_courant=_BURGERS_CFL,
        default_t_final=0.5,
        cut_window=(-0.5, 0.5),
        default_cut_mode="multi",
    )
)

_register(
    Problem(
        name="burgers_riemann_shock",
        domain=(-1.0, 2.0),
        flux=burgers,
        default_flux="godunov",
        beta=1.0,
        initial=lambda x: np.where(np.asarray(x, dtype=float) <= 0.0, 1.0, -0.5),
        bc=lambda: BoundaryCondition.dirichlet(left=1.0, right=-0.5),
        exact=lambda x, t: analysis.riemann_shock_exact(x, t, 1.0, -0.5),
        default_courant=_BURGERS_CFL,
        default_t_final=0.5,
        cut_window=(-0.5, 0.5),
        default_cut_mode="multi",
    )
)


def get_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; available: {', '.join(sorted(PROBLEMS))}"
        ) from None


def make_cut_spec(
    problem: Problem,
    n_cells: int,
    cut_mode: str,
    alpha: float,
    seed: Optional[int] = None,
) -> CutSpec:
    """Resolve a cut mode name into a concrete cut specification.

    `interior` splits the element whose left edge sits at the domain center;
    `multi` splits every element inside the problem's cut window with
    seeded random fractions s_k * alpha.
    """
    if cut_mode == "none":
        return NoCut()
    if cut_mode == "boundary":
        return BoundaryCut(alpha)
    x_l, x_r = problem.domain
    h = (x_r - x_l) / n_cells
    if cut_mode == "interior":
        center = 0.5 * (x_l + x_r)
        j = round((center - x_l) / h) + 1
        if not np.isclose(x_l + (j - 1) * h, center, rtol=0.0, atol=1e-12 * (x_r - x_l)):
            raise MeshError(
                f"interior cut needs the domain center on an element edge; "
                f"use an even cell count (got {n_cells})"
            )
        return InteriorCuts(((j, alpha),))
    if cut_mode == "multi":
        if problem.cut_window is None:
            raise MeshError(f"problem {problem.name} defines no cut window")
        if seed is None:
            raise MeshError("random multi-cut meshes require a seed")
        lo, hi = problem.cut_window
        elements = [
            j
            for j in range(1, n_cells + 1)
            if x_l + (j - 1) * h >= lo - 1e-12 and x_l + j * h <= hi + 1e-12
        ]
        fractions = random_fractions(seed, len(elements))
        return InteriorCuts(
            tuple((j, float(s * alpha)) for j, s in zip(elements, fractions))
        )
    raise MeshError(f"unknown cut mode {cut_mode!r}")


def make_mesh(
    problem: Problem,
    n_cells: int,
    cut_mode: str,
    alpha: float,
    seed: Optional[int] = None,
) -> CutMesh:
    return build_mesh(
        problem.domain, n_cells, make_cut_spec(problem, n_cells, cut_mode, alpha, seed)
    )


def make_numerical_flux(problem: Problem, name: Optional[str] = None) -> NumericalFlux:
    name = name or problem.default_flux
    return NumericalFlux(name, problem.flux(), beta=problem.beta)


def courant_for(problem: Problem, degree: int, override: Optional[float]) -> float:
    if override is not None:
        return override
    try:
        return problem.default_courant[degree]
    except KeyError:
        raise ValueError(
            f"no default Courant number for degree {degree} in {problem.name}; "
            "pass one explicitly"
        ) from None
