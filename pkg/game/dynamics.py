import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np

from milp import SolveOptions, SolveStatus, solve
from planner import NoPlanError, Plan, best_response, decode_plan, encode_mp2, evaluate_plan, plan_single, rescore_plan

from .types import EquilibriumResult, GameError, GameSpec, Profile, SlackReport, ordered_plans

logger = logging.getLogger(__name__)


def initial_profile(
    game: GameSpec, options: Optional[SolveOptions] = None, backend: Optional[str] = None
) -> Profile:
    """Each agent's single-agent plan, ignoring the other agents."""
    plans = []
    for agent in game.agents:
        try:
            plans.append(plan_single(agent, game.obstacles, game.params, options, backend))
        except NoPlanError as exc:
            raise GameError(
                f"agent {agent.id} has no plan even in isolation (status={exc.status})",
                agent_id=agent.id, round=0, status=exc.status,
            ) from exc
    return _profile(game, plans)


def _profile(game: GameSpec, plans: List[Plan]) -> Profile:
    plans = ordered_plans(game, plans)
    status = "optimal" if all(p.status == "optimal" for p in plans) else "limit_reached"
    return Profile(plans, game.params, status, max(p.gap for p in plans))


def profile_objectives(game: GameSpec, profile: Profile) -> Dict[int, float]:
    """J_i of every agent's plan against the others' plans in ``profile``."""
    return {
        agent.id: evaluate_plan(
            profile.plan_for(agent.id), agent, profile.others(game, agent.id), game.params, game.obstacles
        )
        for agent in game.agents
    }


def refresh_profile(game: GameSpec, profile: Profile) -> Profile:
    """Re-score every plan's margins against the others' current plans."""
    plans = []
    for agent in game.agents:
        plan = profile.plan_for(agent.id)
        rescored = rescore_plan(plan, agent, profile.others(game, agent.id), game.params, game.obstacles)
        plans.append(plan if rescored is None else rescored)
    return Profile(tuple(plans), profile.params, profile.status, profile.gap)


def _controls_change(old: Plan, new: Plan, horizon: int) -> float:
    return float(np.max(np.abs(old.controls_array(horizon) - new.controls_array(horizon)), initial=0.0))


def best_response_dynamics(
    game: GameSpec,
    max_rounds: int = 50,
    tol: float = 1e-6,
    order_seed: Optional[int] = None,
    options: Optional[SolveOptions] = None,
    backend: Optional[str] = None,
) -> EquilibriumResult:
    """Round-robin best responses until a full round leaves every plan in place.

    An agent adopts its best response only when it improves J_i by more than
    ``tol``; ``order_seed`` shuffles the update order every round.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    profile = initial_profile(game, options, backend)
    rng = np.random.default_rng(order_seed) if order_seed is not None else None
    history: List[Dict[int, float]] = []
    converged = False
    epsilon = math.inf
    rounds = 0

    for rounds in range(1, max_rounds + 1):
        order = list(game.ids)
        if rng is not None:
            order = [order[k] for k in rng.permutation(len(order))]
        switched = 0
        round_slack = 0.0
        for agent_id in order:
            agent = game.agent(agent_id)
            others = profile.others(game, agent_id)
            current = evaluate_plan(profile.plan_for(agent_id), agent, others, game.params, game.obstacles)
            try:
                candidate = best_response(agent, others, game.params, game.obstacles, options, backend)
            except NoPlanError as exc:
                raise GameError(
                    f"agent {agent_id} has no best response in round {rounds} (status={exc.status})",
                    agent_id=agent_id, round=rounds, status=exc.status,
                ) from exc
            improvement = current - candidate.objective
            round_slack = max(round_slack, improvement)
            if improvement > tol:
                change = _controls_change(profile.plan_for(agent_id), candidate, game.params.horizon)
                logger.debug(
                    "Round %d: agent %d improves J by %.6g (controls moved %.3g)", rounds, agent_id, improvement, change
                )
                profile = profile.replace_plan(candidate)
                switched += 1
        history.append(profile_objectives(game, profile))
        epsilon = round_slack
        logger.info("BRD round %d: %d of %d agents switched", rounds, switched, len(order))
        if switched == 0:
            converged = True
            break

    profile = refresh_profile(game, profile)
    if not converged:
        logger.warning("Best-response dynamics did not converge in %d rounds", max_rounds)
    return EquilibriumResult(profile, rounds, converged, history, max(0.0, epsilon))


def _agent_slack(game: GameSpec, profile: Profile, agent_id: int, options, backend) -> Tuple[int, SlackReport]:
    agent = game.agent(agent_id)
    others = profile.others(game, agent_id)
    current = evaluate_plan(profile.plan_for(agent_id), agent, others, game.params, game.obstacles)
    model, block = encode_mp2(agent, others, game.params, game.obstacles)
    solution = solve(model, options, backend)
    if solution.status is SolveStatus.INFEASIBLE:
        raise GameError(f"agent {agent_id} has no feasible response", agent_id=agent_id, status=solution.status.value)
    if not solution.has_values:
        return agent_id, SlackReport(0.0, lower_bound=True)
    response = decode_plan(solution, block)
    limited = solution.status is not SolveStatus.OPTIMAL
    return agent_id, SlackReport(current - response.objective, lower_bound=limited)


def verify_equilibrium(
    game: GameSpec,
    profile: Profile,
    epsilon: float,
    options: Optional[SolveOptions] = None,
    backend: Optional[str] = None,
    workers: int = 1,
) -> Tuple[bool, Dict[int, SlackReport]]:
    """Re-solve every agent's best response; epsilon-Nash iff every slack is at most ``epsilon``."""
    if len(profile) != len(game.agents):
        raise ValueError("profile must hold one plan per agent")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _agent_slack(game, profile, i, options, backend), game.ids))
    else:
        results = [_agent_slack(game, profile, i, options, backend) for i in game.ids]
    slacks = dict(results)
    worst = max(s.value for s in slacks.values())
    ok = worst <= epsilon
    logger.info("Equilibrium check: max slack %.3g (epsilon %.3g) -> %s", worst, epsilon, ok)
    return ok, slacks
