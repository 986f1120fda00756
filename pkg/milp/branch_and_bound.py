import heapq
import itertools
import logging
import math
import time
from typing import Optional, Tuple

import numpy as np

from .backend import MilpBackend
from .model import MilpModel
from .simplex import solve_lp
from .solution import INTEGRALITY_TOL, MilpError, MilpSolution, SolveOptions, SolveStatus

logger = logging.getLogger(__name__)

Fixings = Tuple[Tuple[int, float], ...]


def _relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    if not math.isfinite(bound):
        return math.inf
    return max(0.0, incumbent - bound) / max(1.0, abs(incumbent))


class BranchAndBoundBackend(MilpBackend):
    """Best-first branch and bound over binaries with simplex relaxations."""

    name = "bnb"

    def solve(self, model: MilpModel, options: SolveOptions) -> MilpSolution:
        started = time.monotonic()
        c = model.objective_vector()
        a_ub, b_ub, a_eq, b_eq = model.to_arrays()
        base_lower, base_upper = model.bounds_arrays()
        binaries = np.array(model.binary_indices(), dtype=int)
        constant = model.objective_constant

        def relax(fixings: Fixings):
            lower, upper = base_lower.copy(), base_upper.copy()
            for index, value in fixings:
                lower[index] = upper[index] = value
            result = solve_lp(c, a_ub, b_ub, a_eq, b_eq, lower, upper)
            if result.status == "unbounded":
                raise MilpError(f"LP relaxation of {model.name!r} is unbounded despite finite bounds")
            if result.status == "iteration_limit":
                raise MilpError(f"simplex iteration limit hit on {model.name!r}")
            return result

        def cutoff(best: float) -> float:
            if not math.isfinite(best):
                return math.inf
            return best - options.gap_tol * max(1.0, abs(best))

        counter = itertools.count()
        # entries: (bound, -depth, seq, fixings); deeper nodes first on equal bounds
        heap = [(-math.inf, 0, next(counter), ())]
        incumbent: Optional[np.ndarray] = None
        incumbent_obj = math.inf
        nodes = 0
        limit_hit = False

        while heap:
            if nodes >= options.node_limit or time.monotonic() - started > options.time_limit:
                limit_hit = True
                break
            bound, neg_depth, _, fixings = heapq.heappop(heap)
            if bound >= cutoff(incumbent_obj):
                continue
            nodes += 1
            lp = relax(fixings)
            if lp.status == "infeasible":
                continue
            node_obj = lp.objective + constant
            if node_obj >= cutoff(incumbent_obj):
                continue

            x = lp.x
            if len(binaries):
                frac = np.minimum(x[binaries] - np.floor(x[binaries]), np.ceil(x[binaries]) - x[binaries])
                branch_pos = int(np.argmax(frac))
                fractional = frac[branch_pos] > INTEGRALITY_TOL
            else:
                fractional = False

            if not fractional:
                point = self._polish(relax, x, binaries)
                value = float(c @ point) + constant
                if value < incumbent_obj:
                    incumbent, incumbent_obj = point, value
                    logger.debug("New incumbent %.9g at node %d", value, nodes)
                continue

            index = int(binaries[branch_pos])
            first, second = (1.0, 0.0) if x[index] >= 0.5 else (0.0, 1.0)
            depth = -neg_depth + 1
            heapq.heappush(heap, (node_obj, -depth, next(counter), fixings + ((index, first),)))
            heapq.heappush(heap, (node_obj, -depth, next(counter), fixings + ((index, second),)))

        wall = time.monotonic() - started
        open_bound = min((entry[0] for entry in heap), default=math.inf)
        best_bound = min(open_bound, incumbent_obj) if limit_hit else incumbent_obj

        if incumbent is None:
            status = SolveStatus.LIMIT_REACHED if limit_hit else SolveStatus.INFEASIBLE
            logger.debug("No incumbent for %r after %d nodes (%s)", model.name, nodes, status.value)
            return MilpSolution(status, nodes_explored=nodes, wall_time=wall, backend=self.name, best_bound=best_bound)

        gap = _relative_gap(incumbent_obj, best_bound)
        if limit_hit and gap > options.gap_tol:
            status = SolveStatus.LIMIT_REACHED
        else:
            status = SolveStatus.OPTIMAL
        values = {model.var_id(i): float(v) for i, v in enumerate(incumbent)}
        return MilpSolution(
            status,
            values=values,
            objective=incumbent_obj,
            best_bound=best_bound,
            gap=gap if limit_hit else 0.0,
            nodes_explored=nodes,
            wall_time=wall,
            backend=self.name,
        )

    @staticmethod
    def _polish(relax, x: np.ndarray, binaries: np.ndarray) -> np.ndarray:
        """Re-solve with binaries fixed at their rounded values so big-M rows hold exactly."""
        point = x.copy()
        if not len(binaries):
            return point
        rounded = np.round(x[binaries])
        polished = relax(tuple(zip(binaries.tolist(), rounded.tolist())))
        if polished.status == "optimal":
            return polished.x
        point[binaries] = rounded
        return point
