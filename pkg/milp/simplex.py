"""Dense bounded-variable primal simplex for LP relaxations.

Solves  min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper
with finite structural bounds. Every row gets a slack (fixed at zero for
equality rows) and, where the all-at-lower start is infeasible, an artificial
column; phase one drives the artificials to zero.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
PHASE_ONE_TOL = 1e-7
REFRESH_EVERY = 200
DEGENERATE_SWITCH = 50


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: Optional[np.ndarray]
    objective: float
    pivots: int


class _Tableau:
    """Revised simplex state with an explicit basis inverse."""

    def __init__(self, matrix, rhs, lower, upper, basis, values):
        self.matrix = matrix
        self.rhs = rhs
        self.lower = lower
        self.upper = upper
        self.basis = basis
        self.x = values
        self.binv = np.linalg.inv(matrix[:, basis]) if len(basis) else np.zeros((0, 0))
        self.is_basic = np.zeros(matrix.shape[1], dtype=bool)
        self.is_basic[basis] = True
        self.pivots = 0

    def refresh(self):
        if not len(self.basis):
            return
        self.binv = np.linalg.inv(self.matrix[:, self.basis])
        nonbasic = ~self.is_basic
        residual = self.rhs - self.matrix[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.binv @ residual

    def run(self, cost, max_pivots: int) -> str:
        bland = False
        degenerate = 0
        movable = self.upper > self.lower
        while True:
            if self.pivots >= max_pivots:
                return "iteration_limit"
            if self.pivots and self.pivots % REFRESH_EVERY == 0:
                self.refresh()
            y = cost[self.basis] @ self.binv if len(self.basis) else np.zeros(0)
            reduced = cost - y @ self.matrix if len(self.basis) else cost.copy()
            at_lower = self.x <= self.lower
            can_rise = movable & ~self.is_basic & (reduced < -COST_TOL) & (self.x < self.upper)
            can_fall = movable & ~self.is_basic & (reduced > COST_TOL) & ~at_lower
            eligible = np.flatnonzero(can_rise | can_fall)
            if not len(eligible):
                return "optimal"
            if bland:
                entering = int(eligible[0])
            else:
                entering = int(eligible[np.argmax(np.abs(reduced[eligible]))])
            direction = 1.0 if can_rise[entering] else -1.0

            column = self.matrix[:, entering]
            alpha = self.binv @ column if len(self.basis) else np.zeros(0)
            step = direction * alpha
            xb = self.x[self.basis]
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]
            ratios = np.full(len(self.basis), np.inf)
            falling = step > PIVOT_TOL
            rising = step < -PIVOT_TOL
            ratios[falling] = (xb[falling] - lb[falling]) / step[falling]
            with np.errstate(invalid="ignore"):
                ratios[rising] = (ub[rising] - xb[rising]) / -step[rising]
            ratios = np.maximum(ratios, 0.0)
            theta_row = ratios.min() if len(ratios) else np.inf
            theta_flip = self.upper[entering] - self.lower[entering]

            if theta_flip <= theta_row:
                if not np.isfinite(theta_flip):
                    return "unbounded"
                self.x[self.basis] = xb - theta_flip * step
                self.x[entering] = self.upper[entering] if direction > 0 else self.lower[entering]
                self.pivots += 1
                degenerate = 0
                bland = False
                continue
            if not np.isfinite(theta_row):
                return "unbounded"

            ties = np.flatnonzero(ratios <= theta_row + 1e-12)
            if bland:
                row = int(ties[np.argmin(np.asarray(self.basis)[ties])])
            else:
                row = int(ties[np.argmax(np.abs(alpha[ties]))])
            leaving = self.basis[row]

            self.x[self.basis] = xb - theta_row * step
            self.x[leaving] = self.lower[leaving] if step[row] > 0 else self.upper[leaving]
            self.x[entering] = self.x[entering] + direction * theta_row

            pivot_row = self.binv[row] / alpha[row]
            self.binv -= np.outer(alpha, pivot_row)
            self.binv[row] = pivot_row
            self.basis[row] = entering
            self.is_basic[leaving] = False
            self.is_basic[entering] = True
            self.pivots += 1

            if theta_row <= 1e-12:
                degenerate += 1
                if degenerate > DEGENERATE_SWITCH and not bland:
                    logger.debug("Switching to Bland's rule after %d degenerate pivots", degenerate)
                    bland = True
            else:
                degenerate = 0
                bland = False


def solve_lp(c, a_ub, b_ub, a_eq, b_eq, lower, upper, max_pivots: Optional[int] = None) -> LpResult:
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    a_ub = np.asarray(a_ub, dtype=float).reshape(-1, n)
    a_eq = np.asarray(a_eq, dtype=float).reshape(-1, n)
    b_ub = np.asarray(b_ub, dtype=float).reshape(-1)
    b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        return LpResult("infeasible", None, float("nan"), 0)

    m_ub, m_eq = a_ub.shape[0], a_eq.shape[0]
    m = m_ub + m_eq
    a = np.vstack([a_ub, a_eq])
    b = np.concatenate([b_ub, b_eq])

    residual = b - a @ lower
    sign = np.where(residual >= 0.0, 1.0, -1.0)
    needs_artificial = np.ones(m, dtype=bool)
    needs_artificial[:m_ub] = residual[:m_ub] < 0.0

    matrix = np.hstack([a, np.eye(m), np.diag(sign)])
    total = n + 2 * m
    lo = np.concatenate([lower, np.zeros(m), np.zeros(m)])
    hi = np.concatenate([upper, np.full(m_ub, np.inf), np.zeros(m_eq), np.where(needs_artificial, np.inf, 0.0)])

    values = lo.copy()
    basis = []
    for i in range(m):
        if needs_artificial[i]:
            basis.append(n + m + i)
            values[n + m + i] = abs(residual[i])
        else:
            basis.append(n + i)
            values[n + i] = residual[i]

    tableau = _Tableau(matrix, b, lo, hi, basis, values)
    limit = max_pivots or 50 * (m + total) + 1000

    if needs_artificial.any():
        phase_one = np.zeros(total)
        phase_one[n + m:] = 1.0
        status = tableau.run(phase_one, limit)
        tableau.refresh()
        if status == "iteration_limit":
            return LpResult(status, None, float("nan"), tableau.pivots)
        infeasibility = float(tableau.x[n + m:].sum())
        if infeasibility > PHASE_ONE_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LpResult("infeasible", None, float("nan"), tableau.pivots)
        # artificials may stay basic at zero but can no longer move
        tableau.upper[n + m:] = 0.0
        tableau.x[n + m:] = np.clip(tableau.x[n + m:], 0.0, 0.0)
        tableau.refresh()

    phase_two = np.concatenate([c, np.zeros(2 * m)])
    status = tableau.run(phase_two, limit)
    tableau.refresh()
    if status != "optimal":
        return LpResult(status, None, float("nan"), tableau.pivots)
    x = np.clip(tableau.x[:n], lower, upper)
    return LpResult("optimal", x, float(c @ x), tableau.pivots)
