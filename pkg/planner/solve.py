import dataclasses
import logging
import math
from typing import Dict, Optional, Sequence, Tuple

from geometry import Polytope
from milp import MilpSolution, SolveOptions, solve, write_lp

from .decoder import decode_plan, plan_risk_bound
from .encoder import PlanVariables, encode_mp1, encode_mp2
from .types import AgentSpec, MarginKey, Plan, PlanParams

logger = logging.getLogger(__name__)

_CLEARANCE_TOL = 1e-9

Opponents = Sequence[Tuple[AgentSpec, Plan]]


def _solve_block(model, block: PlanVariables, options, backend, dump_lp: Optional[str]) -> Tuple[Plan, MilpSolution]:
    if dump_lp:
        with open(dump_lp, "w", encoding="utf-8") as fh:
            fh.write(write_lp(model))
        logger.info("Wrote %s to %s", model.name, dump_lp)
    solution = solve(model, options, backend)
    return decode_plan(solution, block), solution


def plan_single(
    agent: AgentSpec,
    obstacles: Sequence[Polytope],
    params: PlanParams,
    options: Optional[SolveOptions] = None,
    backend: Optional[str] = None,
    dump_lp: Optional[str] = None,
) -> Plan:
    """Solve the single-agent program against static obstacles."""
    model, block = encode_mp1(agent, obstacles, params)
    plan, solution = _solve_block(model, block, options, backend, dump_lp)
    logger.info(
        "Planned agent %d: T_goal=%d J=%.6g status=%s nodes=%d",
        agent.id, plan.goal_step, plan.objective, plan.status, solution.nodes_explored,
    )
    return plan


def best_response(
    agent: AgentSpec,
    others: Opponents,
    params: PlanParams,
    obstacles: Sequence[Polytope] = (),
    options: Optional[SolveOptions] = None,
    backend: Optional[str] = None,
    dump_lp: Optional[str] = None,
) -> Plan:
    """Optimal plan for ``agent`` while every other agent follows its fixed plan."""
    model, block = encode_mp2(agent, others, params, obstacles)
    plan, _ = _solve_block(model, block, options, backend, dump_lp)
    return plan


def rescore_plan(
    plan: Plan,
    agent: AgentSpec,
    others: Opponents,
    params: PlanParams,
    obstacles: Sequence[Polytope] = (),
) -> Optional[Plan]:
    """Keep the controls and goal step of ``plan``; re-optimize only its margins against ``others``.

    Returns None when some active step cannot be separated from a volume.
    """
    _, block = encode_mp2(agent, others, params, obstacles)
    trajectory = plan.trajectory_array(params.horizon)
    cap = params.margin_cap
    margins: Dict[MarginKey, float] = {}
    selected: Dict[MarginKey, int] = {}
    for group in block.groups:
        key = (group.label, group.t)
        if group.t >= plan.goal_step:
            margins[key], selected[key] = cap, 0
            continue
        r = trajectory[group.t]
        best, best_face = -math.inf, -1
        for p, (face, coef) in enumerate(zip(group.volume.faces, group.coefficients)):
            clearance = face.normal[0] * r[0] + face.normal[1] * r[1] - face.offset
            if clearance < -_CLEARANCE_TOL:
                continue
            s = cap if coef <= 0.0 else min(cap, max(0.0, clearance) / coef)
            if s > best:
                best, best_face = s, p
        if best_face < 0:
            logger.debug("Plan of agent %d collides with %s at t=%d", agent.id, group.label, group.t)
            return None
        margins[key], selected[key] = best, best_face

    safety = -math.fsum(margins.values())
    rescored = dataclasses.replace(
        plan,
        margins=margins,
        selected_faces=selected,
        safety_term=safety,
        objective=params.lam * plan.goal_step + (1.0 - params.lam) * safety,
    )
    return dataclasses.replace(rescored, risk_bound=plan_risk_bound(rescored))


def evaluate_plan(
    plan: Plan,
    agent: AgentSpec,
    others: Opponents,
    params: PlanParams,
    obstacles: Sequence[Polytope] = (),
) -> float:
    """J of a fixed plan against ``others``; ``math.inf`` if it cannot avoid them."""
    rescored = rescore_plan(plan, agent, others, params, obstacles)
    return math.inf if rescored is None else rescored.objective
