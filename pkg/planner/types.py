import dataclasses
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from geometry import AgentShape, Polytope
from stochastic import CovarianceSchedule, NoiseModel, closed_loop_matrix, erf, propagate_covariance

Vector = Tuple[float, float]
MarginKey = Tuple[str, int]


def _vec(x) -> Vector:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise ValueError(f"expected a 2-vector, got {x!r}")
    return float(arr[0]), float(arr[1])


def _matrix(m) -> np.ndarray:
    arr = np.array(m, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AgentSpec:
    """Dynamics, body, noise and task of one agent."""

    id: int
    shape: AgentShape
    A: np.ndarray
    B: np.ndarray
    noise: NoiseModel
    control_bound: float
    start: Vector
    goal: Vector
    feedback_gain: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "A", _matrix(self.A))
        object.__setattr__(self, "B", _matrix(self.B))
        object.__setattr__(self, "start", _vec(self.start))
        object.__setattr__(self, "goal", _vec(self.goal))
        if not self.control_bound > 0:
            raise ValueError(f"agent {self.id}: control_bound must be positive")
        if self.feedback_gain < 0:
            raise ValueError(f"agent {self.id}: feedback_gain must be nonnegative")

    @classmethod
    def square(
        cls,
        id: int,
        start,
        goal,
        half_extent: float = 7.5,
        vmax: float = 10.0,
        sigma_scale: float = 1.9,
        feedback_gain: float = 0.0,
    ) -> "AgentSpec":
        """Single-integrator agent with an axis-aligned square body."""
        return cls(
            id=id,
            shape=AgentShape.square(half_extent),
            A=np.eye(2),
            B=np.eye(2),
            noise=NoiseModel.isotropic(sigma_scale),
            control_bound=vmax,
            start=start,
            goal=goal,
            feedback_gain=feedback_gain,
        )

    @property
    def is_integrator(self) -> bool:
        return bool(np.array_equal(self.A, np.eye(2)) and np.array_equal(self.B, np.eye(2)))

    def closed_loop(self) -> np.ndarray:
        return closed_loop_matrix(self.A, self.B, self.feedback_gain)

    def covariance(self, horizon: int) -> CovarianceSchedule:
        return propagate_covariance(self.closed_loop(), self.noise, horizon)

    def body_at(self, reference) -> Polytope:
        return self.shape.placed_at(reference)


@dataclass(frozen=True)
class PlanParams:
    horizon: int = 12
    lam: float = 0.5
    big_m: float = 1e4
    margin_cap: float = 4.0
    goal_tolerance: float = 1e-6
    legacy_margin: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.big_m <= 0:
            raise ValueError("big_m must be positive")
        if self.margin_cap <= 0 or erf(self.margin_cap) < 1.0 - 1e-7:
            raise ValueError(f"margin_cap {self.margin_cap} is too small: erf(M') must be >= 1 - 1e-7")
        if self.goal_tolerance <= 0:
            raise ValueError("goal_tolerance must be positive")

    def replace(self, **changes) -> "PlanParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Plan:
    """One agent's decoded plan, truncated at the step its goal is reached."""

    agent_id: int
    controls: Tuple[Vector, ...]
    expected_trajectory: Tuple[Vector, ...]
    goal_step: int
    goal_indicators: Tuple[int, ...]
    margins: Dict[MarginKey, float]
    selected_faces: Dict[MarginKey, int]
    safety_term: float
    time_term: float
    objective: float
    risk_bound: float
    lam: float
    status: str = "optimal"
    gap: float = 0.0

    def controls_array(self, horizon: int) -> np.ndarray:
        """Nominal controls padded with zeros to ``horizon`` steps."""
        out = np.zeros((horizon, 2))
        if self.controls:
            out[: len(self.controls)] = np.asarray(self.controls)
        return out

    def trajectory_array(self, horizon: int) -> np.ndarray:
        """Expected positions 0..horizon, held at the goal after goal_step."""
        traj = np.asarray(self.expected_trajectory, dtype=float)
        out = np.repeat(traj[-1:], horizon + 1, axis=0)
        out[: len(traj)] = traj
        return out

    def position(self, t: int) -> Vector:
        return self.expected_trajectory[min(t, len(self.expected_trajectory) - 1)]

    def recompute_objective(self) -> float:
        return self.lam * self.time_term + (1.0 - self.lam) * self.safety_term

