"""Ground-state solvers: exhaustive enumeration, grid DP, variable
elimination, parallel tempering, and single-flip descent."""

from .base import SolveResult
from .descent import is_flip_stable, steepest_descent
from .elimination import elimination_solve, elimination_solve_batch
from .exhaustive import exhaustive_solve
from .grid import grid_dp_solve
from .registry import SolverProfile, make_solver
from .tempering import PtParams, houdayer_move, pt_solve

__all__ = [
    "PtParams",
    "SolveResult",
    "SolverProfile",
    "elimination_solve",
    "elimination_solve_batch",
    "exhaustive_solve",
    "grid_dp_solve",
    "houdayer_move",
    "is_flip_stable",
    "make_solver",
    "pt_solve",
    "steepest_descent",
]
