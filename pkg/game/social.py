import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from geometry import collision_volume
from milp import LinExpr, MilpModel, SolveOptions, SolveStatus, solve, write_lp
from planner import PlanVariables, PlanVerificationError, decode_plan
from planner.encoder import (
    add_agent_block,
    add_collision_group,
    add_static_groups,
    check_big_m,
    check_horizon,
    reject_inside,
    scene_points,
)

from .dynamics import refresh_profile
from .types import EquilibriumResult, GameError, GameSpec, OutcomeReport, Profile, ordered_plans

logger = logging.getLogger(__name__)

_SYMMETRY_TOL = 1e-9


def encode_mp3(game: GameSpec) -> Tuple[MilpModel, List[PlanVariables]]:
    """Joint program over all agents with pairwise collision rows on both agents' variables."""
    params = game.params
    points = []
    for agent in game.agents:
        check_horizon(agent, params)
        points.extend(scene_points(agent, game.obstacles))
    check_big_m(points, params)

    model = MilpModel(f"mp3_{len(game.agents)}agents")
    blocks = {}
    for agent in game.agents:
        prefix = f"a{agent.id}_"
        block = add_agent_block(model, agent, params, prefix)
        block.whole_model = False
        add_static_groups(model, block, game.obstacles, agent.covariance(params.horizon), prefix)
        blocks[agent.id] = block

    covariances = {a.id: a.covariance(params.horizon) for a in game.agents}
    for agent_i in game.agents:
        block_i = blocks[agent_i.id]
        for agent_j in game.agents:
            if agent_j.id == agent_i.id:
                continue
            block_j = blocks[agent_j.id]
            base = collision_volume(agent_i.shape, agent_j.body_at(agent_j.start))
            mirror = collision_volume(agent_j.shape, agent_i.body_at(agent_i.start))
            x_j, y_j = agent_j.start
            x_i, y_i = agent_i.start
            if not base.translate((-x_j, -y_j)).almost_equal(mirror.translate((-x_i, -y_i)).negate(), _SYMMETRY_TOL):
                raise GameError(f"collision volumes of agents {agent_i.id} and {agent_j.id} are not mirror images")
            if agent_i.start != agent_i.goal:
                reject_inside(agent_i, agent_i.start, base, "start")
            for t in range(params.horizon + 1):
                px, py = block_j.positions[t]
                shift = (px - x_j, py - y_j)
                relax = block_i.reached_by(t) + block_j.reached_by(t)
                add_collision_group(
                    model,
                    block_i,
                    f"agent{agent_j.id}",
                    t,
                    base,
                    covariances[agent_i.id][t] + covariances[agent_j.id][t],
                    relax,
                    shift=shift,
                    prefix=f"a{agent_i.id}_",
                )

    objective = LinExpr()
    for block in blocks.values():
        objective = objective + block.objective
    model.set_objective_expr(objective)
    logger.debug("Encoded %r", model)
    return model, [blocks[i] for i in game.ids]


def social_optimum(
    game: GameSpec,
    options: Optional[SolveOptions] = None,
    backend: Optional[str] = None,
    dump_lp: Optional[str] = None,
) -> Profile:
    """Plans minimizing the sum of all agents' objectives.

    The returned plans are rescored against each other with groups only up to each
    opponent's goal step, the same index set best responses are scored on.
    """
    model, blocks = encode_mp3(game)
    if dump_lp:
        with open(dump_lp, "w", encoding="utf-8") as fh:
            fh.write(write_lp(model))
    solution = solve(model, options, backend)
    if not solution.has_values:
        raise GameError(
            f"social optimum has no solution (status={solution.status.value})", status=solution.status.value
        )
    plans = [decode_plan(solution, block) for block in blocks]
    total = math.fsum(p.objective for p in plans)
    if abs(total - solution.objective) > 1e-6 * max(1.0, abs(total)):
        raise PlanVerificationError(
            f"sum of agent objectives {total:.9g} differs from joint objective {solution.objective:.9g}"
        )
    gap = 0.0 if math.isnan(solution.gap) else float(solution.gap)
    status = "optimal" if solution.status is SolveStatus.OPTIMAL else solution.status.value
    if status != "optimal":
        logger.warning("Social optimum stopped with status %s, gap %.3g", status, gap)
    logger.info("Social optimum: total J=%.6g nodes=%d", total, solution.nodes_explored)
    return refresh_profile(game, Profile(ordered_plans(game, plans), game.params, status, gap))


def _means(profile: Profile) -> Tuple[float, float, float]:
    plans = profile.plans
    return (
        float(np.mean([p.objective for p in plans])),
        float(np.mean([p.time_term for p in plans])),
        float(np.mean([p.safety_term for p in plans])),
    )


def compare_outcomes(eq: EquilibriumResult, opt: Profile) -> OutcomeReport:
    """Per-agent means of J, T_goal and G for an equilibrium and a social optimum."""
    eq_ids = sorted(p.agent_id for p in eq.profile.plans)
    opt_ids = sorted(p.agent_id for p in opt.plans)
    if eq_ids != opt_ids:
        raise ValueError(f"profiles cover different agents: {eq_ids} vs {opt_ids}")
    if eq.profile.params != opt.params:
        raise ValueError("profiles were computed under different parameters")
    j_eq, t_eq, g_eq = _means(eq.profile)
    j_opt, t_opt, g_opt = _means(opt)
    return OutcomeReport(j_eq, j_opt, t_eq, t_opt, g_eq, g_opt)

