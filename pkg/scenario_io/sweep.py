import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from game import GameError, GameSpec, Profile, best_response_dynamics, social_optimum
from milp import MilpError, SolveOptions
from montecarlo import RolloutConfig, RolloutReport, rollout
from planner import InfeasibleSetupError, NoPlanError, PlanVerificationError

from .scenario import ScenarioFile

logger = logging.getLogger(__name__)

MODES = ("equilibrium", "social")

CSV_HEADER = [
    "scenario",
    "lambda",
    "mode",
    "feedback_gain",
    "agent_id",
    "T_goal",
    "G",
    "J",
    "risk_bound",
    "empirical_rate",
    "rounds",
    "solver_status",
]

_SWEEP_ERRORS = (GameError, MilpError, NoPlanError, InfeasibleSetupError, PlanVerificationError)


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    lam: float
    mode: str
    feedback_gain: float
    agent_id: Union[int, str]
    T_goal: float
    G: float
    J: float
    risk_bound: float
    empirical_rate: float
    rounds: int
    solver_status: str

    def as_csv(self) -> List[str]:
        values = list(asdict(self).values())
        return [_fmt(v) for v in values]


@dataclass(frozen=True)
class SweepOptions:
    horizon: Optional[int] = None
    feedback_gain: Optional[float] = None
    legacy_margin: Optional[bool] = None
    trials: int = 1000
    seed: int = 0
    max_rounds: int = 50
    tol: float = 1e-6
    order_seed: Optional[int] = None
    solve_options: Optional[SolveOptions] = None
    backend: Optional[str] = None
    workers: int = 1
    modes: Tuple[str, ...] = field(default=MODES)

    def __post_init__(self):
        unknown = set(self.modes) - set(MODES)
        if unknown:
            raise ValueError(f"unknown sweep modes {sorted(unknown)}; valid: {list(MODES)}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _profile_rows(
    scenario: str, lam: float, mode: str, gain: float, profile: Profile, report: RolloutReport, rounds: int, status: str
) -> List[SweepRow]:
    rows = [
        SweepRow(
            scenario, lam, mode, gain, plan.agent_id, float(plan.time_term), plan.safety_term, plan.objective,
            plan.risk_bound, report.agent_collision_rates.get(plan.agent_id, math.nan), rounds, status,
        )
        for plan in profile.plans
    ]
    rows.append(
        SweepRow(
            scenario, lam, mode, gain, "mean",
            float(np.mean([r.T_goal for r in rows])),
            float(np.mean([r.G for r in rows])),
            float(np.mean([r.J for r in rows])),
            float(np.mean([r.risk_bound for r in rows])),
            report.collision_rate, rounds, status,
        )
    )
    return rows


def _failure_rows(scenario: str, lam: float, mode: str, gain: float, agent_ids: Sequence[int], status: str) -> List[SweepRow]:
    nan = math.nan
    return [
        SweepRow(scenario, lam, mode, gain, agent_id, nan, nan, nan, nan, nan, 0, status)
        for agent_id in list(agent_ids) + ["mean"]
    ]


def _run_point(scenario: ScenarioFile, lam: float, opts: SweepOptions) -> List[SweepRow]:
    game: GameSpec = scenario.to_game(lam, opts.horizon, opts.feedback_gain, opts.legacy_margin)
    gain = game.agents[0].feedback_gain
    cfg = RolloutConfig(trials=opts.trials, seed=opts.seed)
    rows: List[SweepRow] = []
    for mode in opts.modes:
        try:
            if mode == "equilibrium":
                result = best_response_dynamics(
                    game, opts.max_rounds, opts.tol, opts.order_seed, opts.solve_options, opts.backend
                )
                profile, rounds = result.profile, result.rounds
                status = profile.status if result.converged else "not_converged"
            else:
                profile, rounds = social_optimum(game, opts.solve_options, opts.backend), 0
                status = profile.status
            report = rollout(game, profile, cfg)
            rows.extend(_profile_rows(scenario.name, lam, mode, gain, profile, report, rounds, status))
        except _SWEEP_ERRORS as exc:
            logger.warning("Sweep point lambda=%g mode=%s failed: %s", lam, mode, exc)
            status = f"error:{type(exc).__name__}"
            rows.extend(_failure_rows(scenario.name, lam, mode, gain, game.ids, status))
    return rows


def run_sweep(scenario: ScenarioFile, options: Optional[SweepOptions] = None) -> List[SweepRow]:
    """Equilibrium and social optimum at every lambda of the grid, rows in lambda-then-mode order."""
    opts = options or SweepOptions()
    grid = list(scenario.lambda_grid)
    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            chunks = list(pool.map(lambda lam: _run_point(scenario, lam, opts), grid))
    else:
        chunks = [_run_point(scenario, lam, opts) for lam in grid]
    rows = [row for chunk in chunks for row in chunk]
    logger.info("Sweep of %s: %d lambda points, %d rows", scenario.name, len(grid), len(rows))
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(row.as_csv())
