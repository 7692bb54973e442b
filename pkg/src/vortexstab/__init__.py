"""Linear stability toolkit for columnar vortices.

Modules
-------
specfun    modified Bessel functions (compiled core with a pure-Python fallback)
profile    vortex profiles and validation of their structural assumptions
grid       mapped Gauss-Legendre radial grid, sector fields, divergence-free bases
pressure   pressure solves (Green's function and boundary-value problem)
operator   discrete sector operators A, B and L = A + B
spectral   sector spectra, scalar radial equation, critical-layer solutions
resolvent  resolvent solves, norms and vertical-line scans
evolution  evolution groups e^{tA}, e^{tL} and growth fits
cli        command-line front end
"""

__version__ = "0.1.0"

from .errors import (AccuracyError, AssemblyError, AssumptionViolation, ConditioningError,
                     CriticalLayerError, DomainError, ProjectionRankError,
                     ScaledRepresentationError, SolverError, VortexStabError)
from .specfun import BACKEND, bessel_IK, bessel_IK_scaled, bessel_ik_array
from .profile import (TabulatedProfile, VortexProfile, check_assumptions, kaufmann_scully,
                      lamb_oseen, omega_from_w)
from .grid import RadialGrid, SectorField, divfree_basis, make_grid, project_divfree
from .pressure import pressure_bvp, pressure_green
from .operator import SectorOperator, assemble_Am, assemble_Bmk, assemble_Lmk
from .spectral import compute_spectrum, critical_layer_profile, scalar_eig_residual
from .resolvent import (resolvent_norm, scan_vertical_line, solve_resolvent_full,
                        solve_resolvent_scalar)
from .evolution import evolve_advection, evolve_full, fit_growth

__all__ = [
    "__version__", "BACKEND",
    "VortexStabError", "DomainError", "AccuracyError", "ScaledRepresentationError",
    "AssumptionViolation", "ProjectionRankError", "AssemblyError", "CriticalLayerError",
    "ConditioningError", "SolverError",
    "bessel_IK", "bessel_IK_scaled", "bessel_ik_array",
    "VortexProfile", "TabulatedProfile", "lamb_oseen", "kaufmann_scully", "omega_from_w",
    "check_assumptions",
    "RadialGrid", "SectorField", "make_grid", "divfree_basis", "project_divfree",
    "pressure_green", "pressure_bvp",
    "SectorOperator", "assemble_Am", "assemble_Bmk", "assemble_Lmk",
    "compute_spectrum", "scalar_eig_residual", "critical_layer_profile",
    "solve_resolvent_full", "solve_resolvent_scalar", "resolvent_norm", "scan_vertical_line",
    "evolve_advection", "evolve_full", "fit_growth",
]
