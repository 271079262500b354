from .backend import SolveResult, SolverSettings, Status, solve
from .gadgets import epigraph_log_reciprocal_product, reciprocal_bound
from .program import HERMITIAN, SYMMETRIC, Affine, Block, ConicProgram, Constraint, ProgramError
from .text import dumps, loads

__all__ = [
    "Affine", "Block", "ConicProgram", "Constraint", "ProgramError", "HERMITIAN", "SYMMETRIC",
    "SolveResult", "SolverSettings", "Status", "solve", "dumps", "loads",
    "epigraph_log_reciprocal_product", "reciprocal_bound",
]
