"""Convex program builder and second-order cone solvers."""

from .ipm import SOLVED, STATUSES, Solution, SolveOptions, solve, solve_standard_form
from .kernels import IMPLEMENTATION
from .program import (
    ConicProgram,
    Linear,
    QuadLeAffine,
    Soc,
    Variable,
    embed_complex_quadratic,
    psd_factor,
    quad_le_affine_to_soc,
)

__all__ = [
    "ConicProgram",
    "Linear",
    "Soc",
    "QuadLeAffine",
    "Variable",
    "embed_complex_quadratic",
    "psd_factor",
    "quad_le_affine_to_soc",
    "solve",
    "solve_standard_form",
    "Solution",
    "SolveOptions",
    "SOLVED",
    "STATUSES",
    "IMPLEMENTATION",
]
