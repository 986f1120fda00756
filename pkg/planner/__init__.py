from .decoder import decode_plan, plan_risk_bound, verify_plan
from .encoder import CollisionGroup, PlanVariables, add_agent_block, add_collision_group, encode_mp1, encode_mp2
from .errors import InfeasibleSetupError, NoPlanError, PlanVerificationError
from .solve import best_response, evaluate_plan, plan_single, rescore_plan
from .types import AgentSpec, Plan, PlanParams

__all__ = [
    "AgentSpec",
    "CollisionGroup",
    "InfeasibleSetupError",
    "NoPlanError",
    "Plan",
    "PlanParams",
    "PlanVariables",
    "PlanVerificationError",
    "add_agent_block",
    "add_collision_group",
    "best_response",
    "decode_plan",
    "encode_mp1",
    "encode_mp2",
    "evaluate_plan",
    "plan_risk_bound",
    "plan_single",
    "rescore_plan",
    "verify_plan",
]
