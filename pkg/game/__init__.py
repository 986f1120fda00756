from .dynamics import (
    best_response_dynamics,
    initial_profile,
    profile_objectives,
    refresh_profile,
    verify_equilibrium,
)
from .social import compare_outcomes, encode_mp3, social_optimum
from .types import EquilibriumResult, GameError, GameSpec, OutcomeReport, Profile, SlackReport

__all__ = [
    "EquilibriumResult",
    "GameError",
    "GameSpec",
    "OutcomeReport",
    "Profile",
    "SlackReport",
    "best_response_dynamics",
    "compare_outcomes",
    "encode_mp3",
    "initial_profile",
    "profile_objectives",
    "refresh_profile",
    "social_optimum",
    "verify_equilibrium",
]
