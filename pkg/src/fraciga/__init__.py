"""Isogeometric collocation for the fractional Laplacian on NURBS domains."""
from .assembly import DiscretizationParams, collocation_points, fractional_laplacian_matrix
from .benchmarks import convergence_study, eigen_pair, heat_exact_origin
from .nurbs import NurbsSurface, refine_dyadic, refine_uniform, square, unit_disk
from .solvers import simulate_porous, solve_poisson

__version__ = "0.1.0"

__all__ = [
    "DiscretizationParams",
    "NurbsSurface",
    "collocation_points",
    "convergence_study",
    "eigen_pair",
    "fractional_laplacian_matrix",
    "heat_exact_origin",
    "refine_dyadic",
    "refine_uniform",
    "simulate_porous",
    "solve_poisson",
    "square",
    "unit_disk",
]
