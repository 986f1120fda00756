from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from geometry import Polytope
from planner import AgentSpec, Plan, PlanParams


class GameError(RuntimeError):
    """A game-level solve failed; carries the acting agent, round and solver status when known."""

    def __init__(self, message: str, agent_id: Optional[int] = None, round: Optional[int] = None, status: str = ""):
        super().__init__(message)
        self.agent_id = agent_id
        self.round = round
        self.status = status


@dataclass(frozen=True)
class GameSpec:
    agents: Tuple[AgentSpec, ...]
    params: PlanParams
    obstacles: Tuple[Polytope, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if not self.agents:
            raise ValueError("a game needs at least one agent")
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError(f"agent ids must be distinct, got {ids}")
        starts = [a.start for a in self.agents]
        if len(set(starts)) != len(starts):
            raise ValueError("agent starts must be pairwise distinct")

    @property
    def ids(self) -> List[int]:
        return [a.id for a in self.agents]

    def agent(self, agent_id: int) -> AgentSpec:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(f"no agent with id {agent_id}")


@dataclass(frozen=True, eq=False)
class Profile:
    """One plan per agent, all decoded under the same params."""

    plans: Tuple[Plan, ...]
    params: PlanParams
    status: str = "optimal"
    gap: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "plans", tuple(self.plans))
        ids = [p.agent_id for p in self.plans]
        if len(set(ids)) != len(ids):
            raise ValueError(f"profile holds more than one plan for an agent: {ids}")

    def plan_for(self, agent_id: int) -> Plan:
        for p in self.plans:
            if p.agent_id == agent_id:
                return p
        raise KeyError(f"profile has no plan for agent {agent_id}")

    def others(self, game: GameSpec, agent_id: int) -> List[Tuple[AgentSpec, Plan]]:
        return [(a, self.plan_for(a.id)) for a in game.agents if a.id != agent_id]

    def replace_plan(self, plan: Plan) -> "Profile":
        plans = tuple(plan if p.agent_id == plan.agent_id else p for p in self.plans)
        status = "optimal" if all(p.status == "optimal" for p in plans) else "limit_reached"
        return Profile(plans, self.params, status, max(p.gap for p in plans))

    @property
    def total_objective(self) -> float:
        return sum(p.objective for p in self.plans)

    def __len__(self) -> int:
        return len(self.plans)


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    profile: Profile
    rounds: int
    converged: bool
    history: List[Dict[int, float]] = field(default_factory=list)
    epsilon: float = 0.0


@dataclass(frozen=True)
class SlackReport:
    """Best-response slack; ``lower_bound`` is set when the re-solve stopped at a limit."""

    value: float
    lower_bound: bool = False


@dataclass(frozen=True)
class OutcomeReport:
    mean_J_eq: float
    mean_J_opt: float
    mean_T_eq: float
    mean_T_opt: float
    mean_G_eq: float
    mean_G_opt: float

    @property
    def delta_J(self) -> float:
        return self.mean_J_eq - self.mean_J_opt

    @property
    def delta_T(self) -> float:
        return self.mean_T_eq - self.mean_T_opt

    @property
    def delta_G(self) -> float:
        return self.mean_G_eq - self.mean_G_opt

    def as_dict(self) -> Dict[str, float]:
        return {
            "mean_J_eq": self.mean_J_eq,
            "mean_J_opt": self.mean_J_opt,
            "mean_T_eq": self.mean_T_eq,
            "mean_T_opt": self.mean_T_opt,
            "mean_G_eq": self.mean_G_eq,
            "mean_G_opt": self.mean_G_opt,
        }


def ordered_plans(game: GameSpec, plans: Sequence[Plan]) -> Tuple[Plan, ...]:
    by_id = {p.agent_id: p for p in plans}
    return tuple(by_id[i] for i in game.ids)
