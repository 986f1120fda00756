import logging
import threading
from abc import ABC, abstractmethod
from typing import Dict, Optional

import numpy as np

from .model import MilpModel
from .solution import MilpSolution, SolveOptions, SolveStatus, verify_solution

logger = logging.getLogger(__name__)


class MilpBackend(ABC):
    """Abstract base class for MILP solvers."""

    name = "abstract"

    @abstractmethod
    def solve(self, model: MilpModel, options: SolveOptions) -> MilpSolution:
        """Solve ``model`` and return a solution in the model's own variable handles."""


class ScipyMilpBackend(MilpBackend):
    """Adapter for scipy.optimize.milp (HiGHS)."""

    name = "scipy"

    def solve(self, model: MilpModel, options: SolveOptions) -> MilpSolution:
        from scipy.optimize import Bounds, LinearConstraint, linprog, milp

        c = model.objective_vector()
        lower, upper = model.bounds_arrays()
        integrality = np.zeros(model.num_variables)
        binaries = model.binary_indices()
        integrality[binaries] = 1
        a_ub, b_ub, a_eq, b_eq = model.to_arrays()
        constraints = []
        if len(b_ub):
            constraints.append(LinearConstraint(a_ub, -np.inf, b_ub))
        if len(b_eq):
            constraints.append(LinearConstraint(a_eq, b_eq, b_eq))

        res = milp(
            c,
            integrality=integrality,
            bounds=Bounds(lower, upper),
            constraints=constraints,
            options={
                "time_limit": options.time_limit,
                "node_limit": options.node_limit,
                "mip_rel_gap": options.gap_tol,
            },
        )
        nodes = int(getattr(res, "mip_node_count", 0) or 0)
        if res.x is None:
            status = {2: SolveStatus.INFEASIBLE, 3: SolveStatus.UNBOUNDED}.get(res.status, SolveStatus.LIMIT_REACHED)
            return MilpSolution(status, nodes_explored=nodes, backend=self.name)

        x = np.asarray(res.x, dtype=float)
        if binaries:
            # polish: fix rounded binaries and re-solve the continuous part
            fixed_lo, fixed_hi = lower.copy(), upper.copy()
            fixed_lo[binaries] = fixed_hi[binaries] = np.round(x[binaries])
            lp = linprog(
                c,
                A_ub=a_ub if len(b_ub) else None,
                b_ub=b_ub if len(b_ub) else None,
                A_eq=a_eq if len(b_eq) else None,
                b_eq=b_eq if len(b_eq) else None,
                bounds=list(zip(fixed_lo, fixed_hi)),
                method="highs",
            )
            if lp.status == 0:
                x = np.asarray(lp.x, dtype=float)
            else:
                x[binaries] = np.round(x[binaries])

        objective = float(c @ x) + model.objective_constant
        bound = getattr(res, "mip_dual_bound", None)
        bound = objective if bound is None else float(bound) + model.objective_constant
        gap = float(getattr(res, "mip_gap", 0.0) or 0.0)
        if res.status == 0:
            status = SolveStatus.OPTIMAL
        elif res.status == 1:
            status = SolveStatus.LIMIT_REACHED
        else:
            status = SolveStatus.FEASIBLE
        return MilpSolution(
            status,
            values={model.var_id(i): float(v) for i, v in enumerate(x)},
            objective=objective,
            best_bound=bound,
            gap=gap,
            nodes_explored=nodes,
            backend=self.name,
        )


_registry_lock = threading.Lock()
_registry: Dict[str, MilpBackend] = {}


def get_backend(name: Optional[str] = None) -> MilpBackend:
    """Return the shared backend instance registered under ``name`` (settings default)."""
    from config.settings import Settings
    from .branch_and_bound import BranchAndBoundBackend

    name = (name or Settings.get_instance().milp_backend).lower()
    classes = {"bnb": BranchAndBoundBackend, "scipy": ScipyMilpBackend}
    if name not in classes:
        raise ValueError(f"Unknown MILP backend '{name}'. Valid backends: {sorted(classes)}")
    with _registry_lock:
        if name not in _registry:
            _registry[name] = classes[name]()
        return _registry[name]


def solve(
    model: MilpModel,
    options: Optional[SolveOptions] = None,
    backend: Optional[str] = None,
) -> MilpSolution:
    """Solve with the configured backend, then verify the returned point."""
    from config.settings import Settings

    options = options or SolveOptions.from_settings(Settings.get_instance())
    solver = get_backend(backend)
    solution = solver.solve(model, options)
    verify_solution(model, solution)
    logger.debug(
        "Solved %r with %s: status=%s objective=%.9g nodes=%d time=%.3fs",
        model,
        solver.name,
        solution.status.value,
        solution.objective,
        solution.nodes_explored,
        solution.wall_time,
    )
    return solution
