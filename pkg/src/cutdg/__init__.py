"""Cut discontinuous Galerkin solver for 1D scalar conservation laws.

Small cut cells are handled by jump penalties on the faces next to them,
which keeps the mass matrix well conditioned and the explicit time step
independent of the cut size.
"""

from .analysis import (
    SpectrumReport,
    convergence_rates,
    error_norms,
    spectrum_report,
    total_variation_means,
)
from .flux import FluxFunction, NumericalFlux, advection, burgers
from .limiter import LimiterConfig, apply_tvb, minmod, tvb_minmod
from .mesh import BoundaryCut, Cell, CutMesh, Face, InteriorCuts, NoCut, build_mesh
from .operator import (
    BoundaryCondition,
    SpatialOperator,
    assemble_linear_stiffness,
    assemble_mass,
)
from .projection import l2_project, stabilized_l2_project
from .stabilization import StabilizationParams, penalty_face_block, penalty_quadratic
from .timestep import TimeScheme, advance, default_scheme_kind, tvd_timestep_bound

__all__ = [
    "BoundaryCondition",
    "BoundaryCut",
    "Cell",
    "CutMesh",
    "Face",
    "FluxFunction",
    "InteriorCuts",
    "LimiterConfig",
    "NoCut",
    "NumericalFlux",
    "SpatialOperator",
    "SpectrumReport",
    "StabilizationParams",
    "TimeScheme",
    "advance",
    "advection",
    "apply_tvb",
    "assemble_linear_stiffness",
    "assemble_mass",
    "build_mesh",
    "burgers",
    "convergence_rates",
    "default_scheme_kind",
    "error_norms",
    "l2_project",
    "minmod",
    "penalty_face_block",
    "penalty_quadratic",
    "spectrum_report",
    "stabilized_l2_project",
    "total_variation_means",
    "tvb_minmod",
    "tvd_timestep_bound",
]

__version__ = "0.1.0"
