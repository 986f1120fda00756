import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from geometry import Polytope, collision_volume
from milp import LinExpr, MilpModel, Sense, VarId
from stochastic import margin_coefficient

from .errors import InfeasibleSetupError
from .types import AgentSpec, Plan, PlanParams

logger = logging.getLogger(__name__)

_INTERIOR_TOL = -1e-9

Position = Tuple[LinExpr, LinExpr]


@dataclass(frozen=True)
class CollisionGroup:
    """Disjunctive rows keeping one agent out of one volume at one step.

    Row for face p:  a_p . (r_t - shift) >= b_p + coef_p * s - M (1 - z_p) - M * relax.
    """

    label: str
    t: int
    volume: Polytope
    coefficients: Tuple[float, ...]
    margin: VarId
    selectors: Tuple[VarId, ...]
    relax: LinExpr
    shift: Optional[Position] = None


@dataclass
class PlanVariables:
    """Variable map for one agent's block inside a model."""

    agent: AgentSpec
    params: PlanParams
    controls: List[Tuple[VarId, VarId]]
    positions: List[Position]
    goal_flags: List[VarId]
    groups: List[CollisionGroup] = field(default_factory=list)
    objective: LinExpr = field(default_factory=LinExpr)
    whole_model: bool = True

    def reached_by(self, t: int) -> LinExpr:
        """sum_{k<=t} d_k."""
        expr = LinExpr()
        for k in range(t + 1):
            expr.add_term(self.goal_flags[k], 1.0)
        return expr


# ---------------------------------------------------------------------------
# Shared building blocks
# ---------------------------------------------------------------------------


def add_agent_block(model: MilpModel, agent: AgentSpec, params: PlanParams, prefix: str = "") -> PlanVariables:
    """Controls, expected positions, goal indicators and goal rows for one agent."""
    horizon, big_m, vmax = params.horizon, params.big_m, agent.control_bound
    controls = [
        (
            model.add_continuous(-vmax, vmax, f"{prefix}u_{t}_x"),
            model.add_continuous(-vmax, vmax, f"{prefix}u_{t}_y"),
        )
        for t in range(horizon)
    ]

    start = agent.start
    positions: List[Position] = [(LinExpr(constant=start[0]), LinExpr(constant=start[1]))]
    if agent.is_integrator:
        # r_t = r_0 + sum_{k<t} u_k, substituted directly
        for t in range(horizon):
            prev = positions[-1]
            positions.append((prev[0] + controls[t][0], prev[1] + controls[t][1]))
    else:
        for t in range(horizon):
            r = (
                model.add_continuous(-big_m, big_m, f"{prefix}r_{t + 1}_x"),
                model.add_continuous(-big_m, big_m, f"{prefix}r_{t + 1}_y"),
            )
            prev = positions[-1]
            for c in range(2):
                rhs = LinExpr()
                for k in range(2):
                    rhs = rhs + prev[k] * agent.A[c, k]
                    rhs.add_term(controls[t][k], agent.B[c, k])
                model.add_expr_constraint(LinExpr.of(r[c]) - rhs, Sense.EQ, 0.0, f"{prefix}dyn_{t}_{c}")
            positions.append((LinExpr.of(r[0]), LinExpr.of(r[1])))

    goal_flags = [model.add_binary(f"{prefix}d_{t}") for t in range(horizon + 1)]
    model.add_constraint([(d, 1.0) for d in goal_flags], Sense.EQ, 1.0, f"{prefix}reach_once")
    for t, d in enumerate(goal_flags):
        for c in range(2):
            # |r_{t,c} - goal_c| <= M (1 - d_t)
            offset = positions[t][c] - agent.goal[c]
            model.add_expr_constraint(offset + LinExpr.of(d, big_m), Sense.LE, big_m, f"{prefix}goal_hi_{t}_{c}")
            model.add_expr_constraint(offset - LinExpr.of(d, big_m), Sense.GE, -big_m, f"{prefix}goal_lo_{t}_{c}")

    objective = LinExpr()
    for t, d in enumerate(goal_flags):
        if t:
            objective.add_term(d, params.lam * t)
    return PlanVariables(agent, params, controls, positions, goal_flags, objective=objective)


def add_collision_group(
    model: MilpModel,
    block: PlanVariables,
    label: str,
    t: int,
    volume: Polytope,
    cov: np.ndarray,
    relax: LinExpr,
    shift: Optional[Position] = None,
    prefix: str = "",
) -> CollisionGroup:
    """Margin variable, face selectors and big-M rows for one (volume, step) pair."""
    params = block.params
    big_m = params.big_m
    margin = model.add_continuous(0.0, params.margin_cap, f"{prefix}s_{label}_{t}")
    selectors = tuple(model.add_binary(f"{prefix}z_{label}_{t}_{p}") for p in range(len(volume.faces)))
    model.add_constraint([(z, 1.0) for z in selectors], Sense.GE, 1.0, f"{prefix}pick_{label}_{t}")

    rx, ry = block.positions[t]
    if shift is not None:
        rx, ry = rx - shift[0], ry - shift[1]
    coefficients = []
    for face, z in zip(volume.faces, selectors):
        coef = margin_coefficient(face.normal, cov, legacy=params.legacy_margin)
        coefficients.append(coef)
        ax, ay = face.normal
        row = rx * ax + ry * ay
        row.add_term(margin, -coef)
        row.add_term(z, -big_m)
        row = row + relax * big_m
        model.add_expr_constraint(row, Sense.GE, face.offset - big_m, f"{prefix}avoid_{label}_{t}")

    block.objective.add_term(margin, -(1.0 - params.lam))
    group = CollisionGroup(label, t, volume, tuple(coefficients), margin, selectors, relax, shift)
    block.groups.append(group)
    return group


def check_horizon(agent: AgentSpec, params: PlanParams) -> None:
    if not agent.is_integrator:
        return
    dx = max(abs(agent.goal[0] - agent.start[0]), abs(agent.goal[1] - agent.start[1]))
    needed = math.ceil(dx / agent.control_bound - 1e-12)
    if needed > params.horizon:
        raise ValueError(
            f"agent {agent.id}: horizon {params.horizon} is shorter than the {needed} steps "
            "an unobstructed path needs"
        )


def check_big_m(points: Sequence, params: PlanParams) -> None:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    diameter = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    if params.big_m < 10.0 * diameter:
        raise ValueError(f"big_m {params.big_m:g} must be at least 10x the scene diameter {diameter:.3g}")


def scene_points(agent: AgentSpec, obstacles: Sequence[Polytope]) -> List[Tuple[float, float]]:
    return [agent.start, agent.goal] + [v for o in obstacles for v in o.vertices]


def reject_inside(agent: AgentSpec, point, volume: Polytope, what: str) -> None:
    if volume.contains(point, tol=_INTERIOR_TOL):
        raise InfeasibleSetupError(f"agent {agent.id}: {what} {tuple(point)} lies inside a collision volume")


def add_static_groups(
    model: MilpModel, block: PlanVariables, obstacles: Sequence[Polytope], cov_schedule, prefix: str = ""
) -> None:
    agent, params = block.agent, block.params
    for n, obstacle in enumerate(obstacles):
        volume = collision_volume(agent.shape, obstacle)
        if agent.start != agent.goal:
            reject_inside(agent, agent.start, volume, "start")
            reject_inside(agent, agent.goal, volume, "goal")
        for t in range(params.horizon + 1):
            add_collision_group(
                model, block, f"obstacle{n}", t, volume, cov_schedule[t], block.reached_by(t), prefix=prefix
            )


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------


def encode_mp1(agent: AgentSpec, obstacles: Sequence[Polytope], params: PlanParams) -> Tuple[MilpModel, PlanVariables]:
    """Single agent against static obstacles."""
    check_horizon(agent, params)
    check_big_m(scene_points(agent, obstacles), params)
    model = MilpModel(f"mp1_agent{agent.id}")
    block = add_agent_block(model, agent, params)
    add_static_groups(model, block, obstacles, agent.covariance(params.horizon))
    model.set_objective_expr(block.objective)
    logger.debug("Encoded %r", model)
    return model, block


def encode_mp2(
    agent: AgentSpec,
    others: Sequence[Tuple[AgentSpec, Plan]],
    params: PlanParams,
    obstacles: Sequence[Polytope] = (),
) -> Tuple[MilpModel, PlanVariables]:
    """Best response of ``agent`` against fixed plans of the other agents."""
    check_horizon(agent, params)
    points = scene_points(agent, obstacles)
    for other, plan in others:
        points.extend(plan.expected_trajectory)
    check_big_m(points, params)

    model = MilpModel(f"mp2_agent{agent.id}")
    block = add_agent_block(model, agent, params)
    own_cov = agent.covariance(params.horizon)
    add_static_groups(model, block, obstacles, own_cov)

    for other, plan in others:
        if other.id == agent.id:
            raise ValueError(f"agent {agent.id} cannot respond to itself")
        label = f"agent{other.id}"
        base = collision_volume(agent.shape, other.body_at(other.start))
        if agent.start != agent.goal:
            reject_inside(agent, agent.start, base, "start")
        other_cov = other.covariance(params.horizon)
        x0, y0 = other.start
        for t in range(min(plan.goal_step, params.horizon) + 1):
            px, py = plan.expected_trajectory[t]
            volume = base.translate((px - x0, py - y0))
            add_collision_group(
                model, block, label, t, volume, own_cov[t] + other_cov[t], block.reached_by(t)
            )

    model.set_objective_expr(block.objective)
    logger.debug("Encoded %r against %d opponents", model, len(others))
    return model, block
