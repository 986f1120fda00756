import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

logger = logging.getLogger(__name__)

FACE_TOL = 1e-9
_COLLINEAR_TOL = 1e-12

Vector = Tuple[float, float]


def _as_vector(x) -> Vector:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape != (2,) or not np.all(np.isfinite(arr)):
        raise ValueError(f"expected a finite 2-vector, got {x!r}")
    return float(arr[0]), float(arr[1])


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class HalfSpace:
    """The closed half-plane ``normal . x <= offset`` with a unit normal."""

    normal: Vector
    offset: float

    @classmethod
    def normalized(cls, normal, offset: float) -> "HalfSpace":
        a = np.asarray(normal, dtype=float)
        norm = float(np.linalg.norm(a))
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("half-space normal must be nonzero")
        return cls((float(a[0] / norm), float(a[1] / norm)), float(offset) / norm)

    def slack(self, x) -> float:
        """offset - normal . x; nonnegative inside."""
        return self.offset - (self.normal[0] * x[0] + self.normal[1] * x[1])


@dataclass(frozen=True)
class Polytope:
    """Bounded convex polygon kept in both face and CCW vertex form.

    A single-vertex polytope represents a point; its faces are the four
    axis-aligned half-planes pinning that point.
    """

    faces: Tuple[HalfSpace, ...]
    vertices: Tuple[Vector, ...]

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def point(cls, x=(0.0, 0.0)) -> "Polytope":
        px, py = _as_vector(x)
        faces = (
            HalfSpace((1.0, 0.0), px),
            HalfSpace((0.0, 1.0), py),
            HalfSpace((-1.0, 0.0), -px),
            HalfSpace((0.0, -1.0), -py),
        )
        return cls(faces, ((px, py),))

    @classmethod
    def from_vertices(cls, vertices: Sequence) -> "Polytope":
        """Build from a convex CCW vertex loop, dropping duplicate and collinear vertices."""
        pts = [_as_vector(v) for v in vertices]
        if not pts:
            raise ValueError("polytope needs at least one vertex")
        pts = _drop_degenerate(pts)
        if len(pts) == 1:
            return cls.point(pts[0])
        if len(pts) < 3:
            raise ValueError("polytope must be full-dimensional (got a segment)")
        n = len(pts)
        for i in range(n):
            if _cross(pts[i - 1], pts[i], pts[(i + 1) % n]) <= 0.0:
                raise ValueError("vertices must form a convex counter-clockwise loop")
        faces = []
        for i in range(n):
            a, b = pts[i], pts[(i + 1) % n]
            edge = (b[0] - a[0], b[1] - a[1])
            # outward normal of a CCW edge points to its right
            faces.append(HalfSpace.normalized((edge[1], -edge[0]), edge[1] * a[0] - edge[0] * a[1]))
        return cls(tuple(faces), tuple(pts))

    @classmethod
    def from_points(cls, points: Iterable) -> "Polytope":
        """Convex hull of a point cloud."""
        arr = np.array([_as_vector(p) for p in points], dtype=float)
        if len(arr) == 0:
            raise ValueError("polytope needs at least one point")
        if np.allclose(arr, arr[0], atol=0.0, rtol=0.0):
            return cls.point(arr[0])
        try:
            hull = ConvexHull(arr)
        except QhullError as exc:
            raise ValueError("points do not span a full-dimensional polygon") from exc
        # 2-D hull vertices come back counter-clockwise
        return cls.from_vertices(arr[hull.vertices])

    # ------------------------------------------------------------------
    # Views
    # ------------------------------------------------------------------

    @property
    def is_point(self) -> bool:
        return len(self.vertices) == 1

    @property
    def normals(self) -> np.ndarray:
        return np.array([f.normal for f in self.faces], dtype=float)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([f.offset for f in self.faces], dtype=float)

    @property
    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        v = self.vertex_array
        return v.min(axis=0), v.max(axis=0)

    # ------------------------------------------------------------------
    # Operations
    # ------------------------------------------------------------------

    def contains(self, x, tol: float = FACE_TOL) -> bool:
        px, py = _as_vector(x)
        return all(f.normal[0] * px + f.normal[1] * py <= f.offset + tol for f in self.faces)

    def contains_many(self, points, tol: float = FACE_TOL) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.all(pts @ self.normals.T <= self.offsets + tol, axis=1)

    def translate(self, delta) -> "Polytope":
        dx, dy = _as_vector(delta)
        faces = tuple(
            HalfSpace(f.normal, f.offset + f.normal[0] * dx + f.normal[1] * dy) for f in self.faces
        )
        vertices = tuple((x + dx, y + dy) for x, y in self.vertices)
        return Polytope(faces, vertices)

    def negate(self) -> "Polytope":
        """Point reflection through the origin, {-x : x in P}."""
        if self.is_point:
            x, y = self.vertices[0]
            return Polytope.point((-x, -y))
        # a 180 degree rotation keeps the loop counter-clockwise
        return Polytope.from_vertices([(-x, -y) for x, y in self.vertices])

    def almost_equal(self, other: "Polytope", tol: float = 1e-9) -> bool:
        if len(self.vertices) != len(other.vertices):
            return False
        mine, theirs = self.vertex_array, other.vertex_array
        # same loop, possibly starting at a different vertex
        for shift in range(len(theirs)):
            if np.allclose(mine, np.roll(theirs, -shift, axis=0), atol=tol, rtol=0.0):
                return True
        return False

    def check_duality(self, tol: float = FACE_TOL) -> None:
        """Raise AssertionError unless faces and vertices describe the same set."""
        for v in self.vertices:
            if not self.contains(v, tol):
                raise AssertionError(f"vertex {v} violates a face")
        need = 1 if self.is_point else 2
        for f in self.faces:
            tight = sum(1 for v in self.vertices if abs(f.slack(v)) <= tol * max(1.0, abs(f.offset)))
            if tight < need:
                raise AssertionError(f"face {f} is tight at {tight} vertices")


@dataclass(frozen=True)
class AgentShape:
    """Body of an agent relative to its reference point."""

    relative_region: Polytope

    def __post_init__(self):
        if not self.relative_region.contains((0.0, 0.0)):
            raise ValueError("agent shape must contain its reference point")

    @classmethod
    def point(cls) -> "AgentShape":
        return cls(Polytope.point((0.0, 0.0)))

    @classmethod
    def rectangle(cls, half_extent) -> "AgentShape":
        return cls(box((0.0, 0.0), half_extent))

    @classmethod
    def square(cls, half_extent: float) -> "AgentShape":
        return cls.rectangle((half_extent, half_extent))

    def placed_at(self, reference) -> Polytope:
        return self.relative_region.translate(reference)


def _drop_degenerate(pts):
    """Remove repeated and collinear vertices from a closed loop."""
    out = []
    for p in pts:
        if not out or abs(p[0] - out[-1][0]) > _COLLINEAR_TOL or abs(p[1] - out[-1][1]) > _COLLINEAR_TOL:
            out.append(p)
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= _COLLINEAR_TOL and abs(out[0][1] - out[-1][1]) <= _COLLINEAR_TOL:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        scale = max(1.0, max(abs(c) for p in out for c in p))
        for i in range(len(out)):
            prev, cur, nxt = out[i - 1], out[i], out[(i + 1) % len(out)]
            if abs(_cross(prev, cur, nxt)) <= _COLLINEAR_TOL * scale * scale:
                del out[i]
                changed = True
                break
    return out


def _bottom_first(pts):
    k = min(range(len(pts)), key=lambda i: (pts[i][1], pts[i][0]))
    return pts[k:] + pts[:k]


def _minkowski_sum(p: Sequence[Vector], q: Sequence[Vector]):
    """Edge-merge Minkowski sum of two convex CCW loops."""
    p, q = _bottom_first(list(p)), _bottom_first(list(q))
    n, m = len(p), len(q)
    p_ext = p + p[:2] if n > 1 else p * 3
    q_ext = q + q[:2] if m > 1 else q * 3
    out = []
    i = j = 0
    while i < n or j < m:
        out.append((p_ext[i][0] + q_ext[j][0], p_ext[i][1] + q_ext[j][1]))
        ep = (p_ext[i + 1][0] - p_ext[i][0], p_ext[i + 1][1] - p_ext[i][1])
        eq = (q_ext[j + 1][0] - q_ext[j][0], q_ext[j + 1][1] - q_ext[j][1])
        cross = ep[0] * eq[1] - ep[1] * eq[0]
        if cross >= 0.0 and i < n:
            i += 1
        if cross <= 0.0 and j < m:
            j += 1
    return out


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def box(center, half_extent) -> Polytope:
    """Axis-aligned rectangle."""
    cx, cy = _as_vector(center)
    hx, hy = _as_vector(half_extent)
    if hx <= 0.0 or hy <= 0.0:
        raise ValueError(f"half_extent must be positive, got {(hx, hy)}")
    return Polytope.from_vertices(
        [(cx - hx, cy - hy), (cx + hx, cy - hy), (cx + hx, cy + hy), (cx - hx, cy + hy)]
    )


def collision_volume(agent: AgentShape, obstacle: Polytope) -> Polytope:
    """Reference positions at which the agent body overlaps the obstacle: (-C) + P."""
    neg = [(-x, -y) for x, y in agent.relative_region.vertices]
    return Polytope.from_vertices(_minkowski_sum(neg, obstacle.vertices))


def translate(p: Polytope, delta) -> Polytope:
    return p.translate(delta)


def contains(p: Polytope, x) -> bool:
    return p.contains(x)
