import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)

_SYMMETRY_TOL = 1e-12
_PSD_TOL = 1e-12


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Zero-mean Gaussian process noise with covariance ``sigma``."""

    sigma: np.ndarray

    def __post_init__(self):
        sigma = _frozen(self.sigma)
        if sigma.shape != (2, 2):
            raise ValueError(f"sigma must be 2x2, got shape {sigma.shape}")
        if not np.allclose(sigma, sigma.T, atol=_SYMMETRY_TOL, rtol=0.0):
            raise ValueError("sigma must be symmetric")
        if np.linalg.eigvalsh(sigma).min() < -_PSD_TOL:
            raise ValueError("sigma must be positive semidefinite")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def isotropic(cls, scale: float) -> "NoiseModel":
        return cls(float(scale) * np.eye(2))

    def square_root(self) -> np.ndarray:
        """Symmetric L with L L^T = sigma; valid for singular sigma too."""
        w, v = np.linalg.eigh(self.sigma)
        return v @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ v.T


@dataclass(frozen=True, eq=False)
class CovarianceSchedule:
    """Position covariance of the tracking error at steps 0..horizon."""

    per_step: Tuple[np.ndarray, ...]

    def __getitem__(self, t: int) -> np.ndarray:
        return self.per_step[t]

    def __len__(self) -> int:
        return len(self.per_step)

    @property
    def horizon(self) -> int:
        return len(self.per_step) - 1


def closed_loop_matrix(A, B, k: float) -> np.ndarray:
    """Error dynamics A - k B under the correction u = u_nom + k (r_nom - x)."""
    if k < 0.0:
        raise ValueError(f"feedback gain must be nonnegative, got {k}")
    return np.asarray(A, dtype=float) - float(k) * np.asarray(B, dtype=float)


def propagate_covariance(a_cl, noise: NoiseModel, horizon: int) -> CovarianceSchedule:
    """Sigma_t = sum_{k<t} A^(t-k-1) Sigma (A^T)^(t-k-1), via Sigma_{t+1} = A Sigma_t A^T + Sigma."""
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    a_cl = np.asarray(a_cl, dtype=float)
    current = np.zeros((2, 2))
    steps = [_frozen(current)]
    for _ in range(horizon):
        current = a_cl @ current @ a_cl.T + noise.sigma
        # keep exact symmetry against rounding
        current = 0.5 * (current + current.T)
        steps.append(_frozen(current))
    return CovarianceSchedule(tuple(steps))
