"""Second-order finite elements for diffusion-reaction problems with
discontinuous Dirichlet data.

The solution is split into explicitly known singular functions at the data
discontinuities plus an ``H^2``-regular remainder, which is approximated by
a symmetric Nitsche method with P1 or Q1 elements.
"""

from ._backend import BACKEND, configure_threads
from .analysis import (
    ConvergenceRecord,
    ConvergenceTable,
    DiscreteSolution,
    eoc,
    l2_error,
    run_convergence_study,
    solve_level,
)
from .assembly import SparseSystem, assemble
from .boundary_data import (
    BoundaryData,
    EdgeTrace,
    RegularizedProblem,
    SingularFunction,
    regularize,
    sigma,
)
from .cases import ManufacturedCase, get_case, registered_cases
from .geometry import PolygonDomain, rectangle
from .mesh import Mesh, generate_initial, refine_uniform
from .solver import SolveReport, solve_spd

__version__ = "0.1.0"

configure_threads()

__all__ = [
    "BACKEND",
    "BoundaryData",
    "ConvergenceRecord",
    "ConvergenceTable",
    "DiscreteSolution",
    "EdgeTrace",
    "ManufacturedCase",
    "Mesh",
    "PolygonDomain",
    "RegularizedProblem",
    "SingularFunction",
    "SolveReport",
    "SparseSystem",
    "assemble",
    "eoc",
    "generate_initial",
    "get_case",
    "l2_error",
    "rectangle",
    "refine_uniform",
    "registered_cases",
    "regularize",
    "run_convergence_study",
    "sigma",
    "solve_level",
    "solve_spd",
]
