import logging
import math
from typing import Dict

import numpy as np

from milp import MilpSolution
from milp.solution import FEASIBILITY_TOL
from stochastic import risk_from_margin

from .encoder import PlanVariables
from .errors import NoPlanError, PlanVerificationError
from .types import MarginKey, Plan

logger = logging.getLogger(__name__)

_IDENTITY_TOL = 1e-6


def decode_plan(solution: MilpSolution, block: PlanVariables, verify: bool = True) -> Plan:
    """Turn a solver point into a Plan for the agent owning ``block``."""
    agent, params = block.agent, block.params
    if not solution.has_values:
        raise NoPlanError(
            f"agent {agent.id}: solver returned no plan (status={solution.status.value})",
            solution.status.value,
        )
    values = solution.values

    indicators = tuple(int(round(values[d])) for d in block.goal_flags)
    goal_step = int(np.argmax([values[d] for d in block.goal_flags]))

    controls = tuple(
        (float(values[ux]), float(values[uy])) for ux, uy in block.controls[:goal_step]
    )
    trajectory = tuple(
        (px.value(values), py.value(values)) for px, py in block.positions[: goal_step + 1]
    )

    margins: Dict[MarginKey, float] = {}
    selected: Dict[MarginKey, int] = {}
    for group in block.groups:
        key = (group.label, group.t)
        margins[key] = float(values[group.margin])
        selected[key] = int(np.argmax([values[z] for z in group.selectors]))

    safety = -math.fsum(margins.values())
    plan = Plan(
        agent_id=agent.id,
        controls=controls,
        expected_trajectory=trajectory,
        goal_step=goal_step,
        goal_indicators=indicators,
        margins=margins,
        selected_faces=selected,
        safety_term=safety,
        time_term=float(goal_step),
        objective=params.lam * goal_step + (1.0 - params.lam) * safety,
        risk_bound=0.0,
        lam=params.lam,
        status=solution.status.value,
        gap=0.0 if math.isnan(solution.gap) else float(solution.gap),
    )
    object.__setattr__(plan, "risk_bound", plan_risk_bound(plan))
    if verify:
        verify_plan(plan, block, solution)
    logger.debug(
        "Decoded plan for agent %d: T_goal=%d G=%.6g J=%.6g risk<=%.3g",
        agent.id, goal_step, safety, plan.objective, plan.risk_bound,
    )
    return plan


def plan_risk_bound(plan: Plan) -> float:
    """Union bound on collision probability over constrained steps up to the goal."""
    return math.fsum(risk_from_margin(s) for (_, t), s in plan.margins.items() if t <= plan.goal_step)


def verify_plan(plan: Plan, block: PlanVariables, solution: MilpSolution) -> None:
    """Replay the decoded plan against the rows it came from; raise PlanVerificationError on mismatch."""
    agent, params = block.agent, block.params
    values = solution.values

    raw = [values[d] for d in block.goal_flags]
    if sum(plan.goal_indicators) != 1 or abs(math.fsum(raw) - 1.0) > FEASIBILITY_TOL:
        raise PlanVerificationError(f"agent {agent.id}: goal indicators {plan.goal_indicators} are not one-hot")

    gx, gy = plan.expected_trajectory[-1]
    miss = abs(gx - agent.goal[0]) + abs(gy - agent.goal[1])
    if miss > max(params.goal_tolerance, 2.0 * FEASIBILITY_TOL):
        raise PlanVerificationError(f"agent {agent.id}: plan ends {miss:.3g} away from its goal")

    for t, (ux, uy) in enumerate(plan.controls):
        if max(abs(ux), abs(uy)) > agent.control_bound + FEASIBILITY_TOL:
            raise PlanVerificationError(f"agent {agent.id}: control at step {t} exceeds {agent.control_bound}")

    for group in block.groups:
        if group.relax.value(values) > 0.5:
            continue
        p = plan.selected_faces[(group.label, group.t)]
        face = group.volume.faces[p]
        rx, ry = block.positions[group.t]
        if group.shift is not None:
            rx, ry = rx - group.shift[0], ry - group.shift[1]
        lhs = face.normal[0] * rx.value(values) + face.normal[1] * ry.value(values)
        rhs = face.offset + group.coefficients[p] * values[group.margin]
        if lhs < rhs - FEASIBILITY_TOL:
            raise PlanVerificationError(
                f"agent {agent.id}: avoidance row {group.label} t={group.t} face {p} violated by {rhs - lhs:.3g}"
            )

    if abs(plan.objective - block.objective.value(values)) > _IDENTITY_TOL:
        raise PlanVerificationError(f"agent {agent.id}: objective does not match lambda*T + (1-lambda)*G")
    if block.whole_model and abs(plan.objective - solution.objective) > _IDENTITY_TOL * max(1.0, abs(plan.objective)):
        raise PlanVerificationError(
            f"agent {agent.id}: plan objective {plan.objective:.9g} differs from solver objective {solution.objective:.9g}"
        )
