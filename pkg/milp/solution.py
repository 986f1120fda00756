from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

from .model import MilpModel, VarId

INTEGRALITY_TOL = 1e-6
FEASIBILITY_TOL = 1e-6


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT_REACHED = "limit_reached"


@dataclass(frozen=True)
class SolveOptions:
    gap_tol: float = 1e-6
    node_limit: int = 200_000
    time_limit: float = 120.0

    def __post_init__(self):
        if self.gap_tol < 0:
            raise ValueError("gap_tol must be >= 0")
        if self.node_limit <= 0:
            raise ValueError("node_limit must be positive")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")

    @classmethod
    def from_settings(cls, settings) -> "SolveOptions":
        return cls(gap_tol=settings.gap_tol, node_limit=settings.node_limit, time_limit=settings.time_limit)


@dataclass
class MilpSolution:
    status: SolveStatus
    values: Dict[VarId, float] = field(default_factory=dict)
    objective: float = float("nan")
    best_bound: float = float("nan")
    gap: float = float("nan")
    nodes_explored: int = 0
    wall_time: float = 0.0
    backend: str = ""

    @property
    def has_values(self) -> bool:
        return bool(self.values)

    def __getitem__(self, var: VarId) -> float:
        return self.values[var]

    def value(self, var: VarId, default: Optional[float] = None) -> float:
        if default is None:
            return self.values[var]
        return self.values.get(var, default)


class MilpError(RuntimeError):
    """Internal solver failure (not a property of the model)."""


def verify_solution(model: MilpModel, solution: MilpSolution, tol: float = FEASIBILITY_TOL) -> None:
    """Raise MilpError unless the solution's values satisfy every row, bound and integrality."""
    if not solution.values:
        return
    values = [solution.values[model.var_id(i)] for i in range(model.num_variables)]
    violation = model.max_violation(values)
    if violation > tol:
        raise MilpError(f"{solution.backend or 'solver'} returned a point violating the model by {violation:.3e}")
    for i in model.binary_indices():
        v = values[i]
        if min(abs(v), abs(v - 1.0)) > INTEGRALITY_TOL:
            raise MilpError(f"binary variable {model.variables[i].name} is fractional ({v})")
