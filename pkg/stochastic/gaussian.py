import logging
import math

import numpy as np
from scipy import special

logger = logging.getLogger(__name__)

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_NEWTON_STEPS = 2
_QUAD_FORM_TOL = 1e-12


def erf(x: float) -> float:
    """Error function, odd by construction."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"erf needs a finite argument, got {x}")
    return math.copysign(float(special.erf(abs(x))), x)


def erf_inv(y: float) -> float:
    """Inverse error function on (-1, 1): library guess refined by Newton steps."""
    y = float(y)
    if not -1.0 < y < 1.0:
        raise ValueError(f"erf_inv is defined on (-1, 1), got {y}")
    x = float(special.erfinv(y))
    for _ in range(_NEWTON_STEPS):
        slope = _TWO_OVER_SQRT_PI * math.exp(-x * x)
        if slope == 0.0:
            break
        x -= (erf(x) - y) / slope
    return x


def risk_from_margin(s: float) -> float:
    """Upper bound on the violation probability of one face for margin ``s``: (1 - erf(s)) / 2."""
    s = float(s)
    if s < 0.0:
        raise ValueError(f"margin must be nonnegative, got {s}")
    # erfc keeps precision where erf(s) is close to 1
    return float(special.erfc(s)) / 2.0


def margin_from_risk(g: float) -> float:
    """Margin s = erf_inv(1 - 2g) that allocates risk ``g`` to one face."""
    g = float(g)
    if not 0.0 < g <= 0.5:
        raise ValueError(f"risk allocation must lie in (0, 0.5], got {g}")
    return erf_inv(1.0 - 2.0 * g)


def margin_coefficient(face_normal, cov, legacy: bool = False) -> float:
    """Scale sqrt(2 a^T cov a) turning a margin s into a face offset.

    ``legacy`` drops the sqrt(2) factor.
    """
    a = np.asarray(face_normal, dtype=float).reshape(-1)
    q = float(a @ np.asarray(cov, dtype=float) @ a)
    if q < 0.0:
        if q < -_QUAD_FORM_TOL:
            logger.warning("Negative quadratic form %.3e in margin coefficient; clamped to 0", q)
        q = 0.0
    return math.sqrt(q) if legacy else math.sqrt(2.0 * q)
