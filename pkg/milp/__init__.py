from .backend import MilpBackend, ScipyMilpBackend, get_backend, solve
from .branch_and_bound import BranchAndBoundBackend
from .lp_format import write_lp
from .model import Constraint, LinExpr, MilpModel, Sense, VarId, Variable, VarKind
from .simplex import LpResult, solve_lp
from .solution import MilpError, MilpSolution, SolveOptions, SolveStatus, verify_solution

__all__ = [
    "BranchAndBoundBackend",
    "Constraint",
    "LinExpr",
    "LpResult",
    "MilpBackend",
    "MilpError",
    "MilpModel",
    "MilpSolution",
    "ScipyMilpBackend",
    "Sense",
    "SolveOptions",
    "SolveStatus",
    "VarId",
    "VarKind",
    "Variable",
    "get_backend",
    "solve",
    "solve_lp",
    "verify_solution",
    "write_lp",
]
