"""C0 discontinuous Galerkin finite elements for -A : D^2 u = f on rectangles."""

from .assembly import (
    LinearSystem,
    QuadDegrees,
    apply_dirichlet,
    assemble_c0dg,
    assemble_constcoef,
    assemble_divform,
    assemble_rhs,
)
from .driver import ConvergenceTable, RunConfig, run_convergence, solve_once
from .element import (
    AffineMap,
    QuadRule,
    ReferenceElement,
    edge_quadrature,
    lagrange_basis,
    physical_derivatives,
    triangle_quadrature,
)
from .hyperdual import HyperDual, hd_derivatives
from .linalg import SolveReport, SolverError, generalized_sigma_min, mass_matrix, solve_sparse
from .mesh import Mesh, build_rect_mesh, mesh_stats
from .norms import ErrorReport, discrete_lph_norm, eoc, error_norms
from .problems import CoefficientField, ProblemSpec, problem, rhs_eval
from .space import Space, build_space
from .stability import StabilityReport, infsup_constant, stability_sweep, w2h_gram_matrix

__all__ = [
    "AffineMap",
    "CoefficientField",
    "ConvergenceTable",
    "ErrorReport",
    "HyperDual",
    "LinearSystem",
    "Mesh",
    "ProblemSpec",
    "QuadDegrees",
    "QuadRule",
    "ReferenceElement",
    "RunConfig",
    "SolveReport",
    "SolverError",
    "Space",
    "StabilityReport",
    "apply_dirichlet",
    "assemble_c0dg",
    "assemble_constcoef",
    "assemble_divform",
    "assemble_rhs",
    "build_rect_mesh",
    "build_space",
    "discrete_lph_norm",
    "edge_quadrature",
    "eoc",
    "error_norms",
    "generalized_sigma_min",
    "hd_derivatives",
    "infsup_constant",
    "lagrange_basis",
    "mass_matrix",
    "mesh_stats",
    "physical_derivatives",
    "problem",
    "rhs_eval",
    "run_convergence",
    "solve_once",
    "solve_sparse",
    "stability_sweep",
    "triangle_quadrature",
    "w2h_gram_matrix",
]

__version__ = "0.1.0"
