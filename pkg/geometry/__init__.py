from .polytope import (
    FACE_TOL,
    AgentShape,
    HalfSpace,
    Polytope,
    box,
    collision_volume,
    contains,
    translate,
)

__all__ = [
    "FACE_TOL",
    "AgentShape",
    "HalfSpace",
    "Polytope",
    "box",
    "collision_volume",
    "contains",
    "translate",
]
