from .covariance import CovarianceSchedule, NoiseModel, closed_loop_matrix, propagate_covariance
from .gaussian import erf, erf_inv, margin_coefficient, margin_from_risk, risk_from_margin

__all__ = [
    "CovarianceSchedule",
    "NoiseModel",
    "closed_loop_matrix",
    "erf",
    "erf_inv",
    "margin_coefficient",
    "margin_from_risk",
    "propagate_covariance",
    "risk_from_margin",
]
