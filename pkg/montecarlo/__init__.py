from .rollout import RolloutConfig, RolloutReport, halfwidth, rollout, validate_bound, write_trajectories_csv

__all__ = [
    "RolloutConfig",
    "RolloutReport",
    "halfwidth",
    "rollout",
    "validate_bound",
    "write_trajectories_csv",
]
