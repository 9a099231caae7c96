"""Harmonic interpolation with point sources and closed-form Dirichlet-integral inner products."""

from .fit import ErrorStats, FitProblem, FitResult, assemble, evaluate_fit, fit_statistics, make_bases, solve_fit
from .geometry import PointConfig, SeparationStats, angular_separation, kelvin_map, ring_grid, separation_stats
from .kernel import Basis, FieldProbe, Geometry, basis_norm, evaluate_basis, gram_entry, rhs_entry
from .linalg import SymMatrix, condition_number, householder_solve, jacobi_eigenvalues

__all__ = [
    "Basis",
    "ErrorStats",
    "FieldProbe",
    "FitProblem",
    "FitResult",
    "Geometry",
    "PointConfig",
    "SeparationStats",
    "SymMatrix",
    "angular_separation",
    "assemble",
    "basis_norm",
    "condition_number",
    "evaluate_basis",
    "evaluate_fit",
    "fit_statistics",
    "gram_entry",
    "householder_solve",
    "jacobi_eigenvalues",
    "kelvin_map",
    "make_bases",
    "rhs_entry",
    "ring_grid",
    "separation_stats",
    "solve_fit",
]
