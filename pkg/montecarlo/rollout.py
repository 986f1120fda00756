import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from game import GameSpec, Profile
from geometry import collision_volume

logger = logging.getLogger(__name__)

# touching boundaries do not count as a collision
_CONTACT_TOL = -1e-6
_Z95 = 1.96


@dataclass(frozen=True)
class RolloutConfig:
    trials: int = 1000
    seed: int = 0
    record_trajectories: bool = False
    goal_radius: float = 1.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.goal_radius <= 0:
            raise ValueError("goal_radius must be positive")


@dataclass(frozen=True, eq=False)
class RolloutReport:
    trials: int
    collision_rate: float
    collisions_by_pair: Dict[str, int]
    agent_collision_rates: Dict[int, float]
    goal_reach_rate: float
    mean_goal_step: float
    confidence_halfwidth: float
    max_control: float
    agent_ids: List[int] = field(default_factory=list)
    trajectories: Optional[np.ndarray] = None

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "collision_rate": self.collision_rate,
            "collisions_by_pair": dict(self.collisions_by_pair),
            "agent_collision_rates": {str(k): v for k, v in self.agent_collision_rates.items()},
            "goal_reach_rate": self.goal_reach_rate,
            "mean_goal_step": self.mean_goal_step,
            "confidence_halfwidth": self.confidence_halfwidth,
        }


def halfwidth(rate: float, trials: int) -> float:
    """95% normal-approximation half-width of a binomial rate."""
    return _Z95 * math.sqrt(rate * (1.0 - rate) / trials)


def _noise(cfg: RolloutConfig, trial: int, agent_index: int, horizon: int) -> np.ndarray:
    # keyed on (seed, trial, agent) so trials do not depend on each other's draws
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, trial, agent_index])))
    return rng.standard_normal((horizon, 2))


def _simulate_agent(agent, plan, index: int, cfg: RolloutConfig, horizon: int):
    root = agent.noise.square_root()
    draws = np.stack([_noise(cfg, trial, index, horizon) for trial in range(cfg.trials)]) @ root.T
    nominal_u = plan.controls_array(horizon)
    nominal_r = plan.trajectory_array(horizon)
    vmax, k = agent.control_bound, agent.feedback_gain

    states = np.empty((cfg.trials, horizon + 1, 2))
    states[:, 0] = agent.start
    max_control = 0.0
    for t in range(horizon):
        x = states[:, t]
        if t >= plan.goal_step:
            states[:, t + 1] = x
            continue
        u = np.clip(nominal_u[t] + k * (nominal_r[t] - x), -vmax, vmax)
        max_control = max(max_control, float(np.max(np.abs(u))))
        states[:, t + 1] = x @ agent.A.T + u @ agent.B.T + draws[:, t]
    return states, max_control


def rollout(game: GameSpec, profile: Profile, cfg: RolloutConfig) -> RolloutReport:
    """Simulate every plan under process noise and count collisions before goals are reached."""
    horizon = game.params.horizon
    agents = list(game.agents)
    plans = [profile.plan_for(a.id) for a in agents]

    paths, max_control = [], 0.0
    for index, (agent, plan) in enumerate(zip(agents, plans)):
        states, peak = _simulate_agent(agent, plan, index, cfg, horizon)
        paths.append(states)
        max_control = max(max_control, peak)

    any_hit = np.zeros(cfg.trials, dtype=bool)
    agent_hit = {a.id: np.zeros(cfg.trials, dtype=bool) for a in agents}
    by_pair: Dict[str, int] = {}

    for i, (agent_i, plan_i) in enumerate(zip(agents, plans)):
        for n, obstacle in enumerate(game.obstacles):
            volume = collision_volume(agent_i.shape, obstacle)
            hit = np.zeros(cfg.trials, dtype=bool)
            for t in range(plan_i.goal_step):
                hit |= volume.contains_many(paths[i][:, t], tol=_CONTACT_TOL)
            by_pair[f"{agent_i.id}-obstacle{n}"] = int(hit.sum())
            agent_hit[agent_i.id] |= hit
            any_hit |= hit
        for j in range(i + 1, len(agents)):
            agent_j, plan_j = agents[j], plans[j]
            volume = collision_volume(agent_i.shape, agent_j.shape.relative_region)
            hit = np.zeros(cfg.trials, dtype=bool)
            for t in range(min(plan_i.goal_step, plan_j.goal_step)):
                hit |= volume.contains_many(paths[i][:, t] - paths[j][:, t], tol=_CONTACT_TOL)
            by_pair[f"{agent_i.id}-{agent_j.id}"] = int(hit.sum())
            agent_hit[agent_i.id] |= hit
            agent_hit[agent_j.id] |= hit
            any_hit |= hit

    reached, goal_steps = [], []
    for agent, plan, states in zip(agents, plans, paths):
        miss = np.max(np.abs(states[:, plan.goal_step] - np.asarray(agent.goal)), axis=1)
        ok = miss <= cfg.goal_radius
        reached.append(ok)
        goal_steps.extend([plan.goal_step] * int(ok.sum()))

    rate = float(any_hit.mean())
    report = RolloutReport(
        trials=cfg.trials,
        collision_rate=rate,
        collisions_by_pair=by_pair,
        agent_collision_rates={aid: float(hit.mean()) for aid, hit in agent_hit.items()},
        goal_reach_rate=float(np.mean(reached)),
        mean_goal_step=float(np.mean(goal_steps)) if goal_steps else math.nan,
        confidence_halfwidth=halfwidth(rate, cfg.trials),
        max_control=max_control,
        agent_ids=[a.id for a in agents],
        trajectories=np.stack(paths, axis=1) if cfg.record_trajectories else None,
    )
    logger.info(
        "Rollout: %d trials, collision rate %.4g +/- %.3g, goal reach %.4g",
        cfg.trials, rate, report.confidence_halfwidth, report.goal_reach_rate,
    )
    return report


def validate_bound(report: RolloutReport, profile: Profile) -> bool:
    """Empirical collision rate must not exceed the summed analytic bounds beyond sampling error."""
    bound = math.fsum(p.risk_bound for p in profile.plans)
    ok = report.collision_rate <= bound + 3.0 * report.confidence_halfwidth
    if not ok:
        logger.warning(
            "Empirical collision rate %.4g exceeds analytic bound %.4g (+3 halfwidths %.3g)",
            report.collision_rate, bound, report.confidence_halfwidth,
        )
    return ok


def write_trajectories_csv(report: RolloutReport, path: str) -> int:
    """Dump recorded trajectories as trial,agent,t,x,y rows; returns the row count."""
    if report.trajectories is None:
        raise ValueError("rollout was run without record_trajectories")
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "agent", "t", "x", "y"])
        trials, agents, steps, _ = report.trajectories.shape
        for trial in range(trials):
            for a in range(agents):
                for t in range(steps):
                    x, y = report.trajectories[trial, a, t]
                    writer.writerow([trial, report.agent_ids[a], t, format(x, ".9g"), format(y, ".9g")])
                    rows += 1
    return rows
