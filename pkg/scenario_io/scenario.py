"""Scenario documents: the built-in experiment scenes and a line-based text format.

Format (UTF-8, one ``key = value`` per line, ``#`` starts a comment)::

    format_version = 1
    name = opposing
    workspace_min = 0, 0
    workspace_max = 100, 100
    horizon = 12
    lambda = 0.5
    big_m = 10000
    margin_cap = 4
    goal_tolerance = 1e-06
    legacy_margin = false
    lambda_grid = 0.1, 0.2, 0.3
    [agent]
    start = 10, 50
    goal = 95, 50
    half_extent = 7.5, 7.5
    vmax = 10
    sigma_scale = 1.9
    feedback_gain = 0
    [obstacle]
    center = 50, 50
    half_extent = 5, 5

Top-level keys must precede the first block. Agents are numbered 0, 1, ...
in file order.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from config.settings import Settings
from game import GameSpec
from geometry import AgentShape, Polytope, box
from planner import AgentSpec, PlanParams
from stochastic import NoiseModel

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_LAMBDA_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))

Vector = Tuple[float, float]
LineMap = Dict[Tuple[Optional[int], str], int]


class ScenarioError(ValueError):
    """Invalid scenario document; ``field`` and ``line`` locate the problem when known."""

    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.field = field
        self.line = line


@dataclass(frozen=True)
class AgentEntry:
    start: Vector
    goal: Vector
    half_extent: Vector = (7.5, 7.5)
    vmax: float = 10.0
    sigma_scale: float = 1.9
    feedback_gain: float = 0.0


@dataclass(frozen=True)
class ObstacleEntry:
    center: Vector
    half_extent: Vector

    def polytope(self) -> Polytope:
        return box(self.center, self.half_extent)


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    workspace_min: Vector
    workspace_max: Vector
    agents: Tuple[AgentEntry, ...]
    defaults: PlanParams = field(default_factory=PlanParams)
    lambda_grid: Tuple[float, ...] = DEFAULT_LAMBDA_GRID
    obstacles: Tuple[ObstacleEntry, ...] = ()
    format_version: int = FORMAT_VERSION

    def validate(self, lines: Optional[LineMap] = None) -> "ScenarioFile":
        """Raise ScenarioError unless every invariant holds; returns self.

        ``lines`` maps ``(agent index or None, key)`` to a source line; ``(index, "")``
        is the agent's block header.
        """
        lines = lines or {}

        def fail(message: str, key: str, agent: Optional[int] = None) -> ScenarioError:
            line = lines.get((agent, key))
            if line is None and agent is not None:
                line = lines.get((agent, ""))
            return ScenarioError(message, key, line)

        lo, hi = self.workspace_min, self.workspace_max
        if not (lo[0] < hi[0] and lo[1] < hi[1]):
            raise fail(f"workspace_min {lo} must lie below workspace_max {hi}", "workspace_min")
        if not self.agents:
            raise fail("scenario needs at least one [agent] block", "agent")
        for k, agent in enumerate(self.agents):
            for name in ("start", "goal"):
                x, y = getattr(agent, name)
                if not (lo[0] <= x <= hi[0] and lo[1] <= y <= hi[1]):
                    raise fail(f"agent {k} {name} {(x, y)} lies outside the workspace", name, k)
            if agent.vmax <= 0:
                raise fail(f"agent {k} vmax must be positive", "vmax", k)
            if agent.sigma_scale < 0:
                raise fail(f"agent {k} sigma_scale must be nonnegative", "sigma_scale", k)
            if agent.feedback_gain < 0:
                raise fail(f"agent {k} feedback_gain must be nonnegative", "feedback_gain", k)
            if min(agent.half_extent) <= 0:
                raise fail(f"agent {k} half_extent must be positive", "half_extent", k)
        seen: Dict[Vector, int] = {}
        for k, agent in enumerate(self.agents):
            if agent.start in seen:
                raise fail(f"agents {seen[agent.start]} and {k} share start {agent.start}", "start", k)
            seen[agent.start] = k
        if not self.lambda_grid:
            raise fail("lambda_grid must not be empty", "lambda_grid")
        if any(not 0.0 <= lam <= 1.0 for lam in self.lambda_grid):
            raise fail(f"lambda_grid values must lie in [0, 1], got {self.lambda_grid}", "lambda_grid")
        if list(self.lambda_grid) != sorted(self.lambda_grid):
            raise fail("lambda_grid must be sorted ascending", "lambda_grid")
        return self

    def to_game(
        self,
        lam: Optional[float] = None,
        horizon: Optional[int] = None,
        feedback_gain: Optional[float] = None,
        legacy_margin: Optional[bool] = None,
    ) -> GameSpec:
        """GameSpec with agents numbered in file order; arguments override the file's values."""
        changes = {}
        if lam is not None:
            changes["lam"] = lam
        if horizon is not None:
            changes["horizon"] = horizon
        if legacy_margin is not None:
            changes["legacy_margin"] = legacy_margin
        params = self.defaults.replace(**changes) if changes else self.defaults
        agents = []
        for k, entry in enumerate(self.agents):
            agents.append(
                AgentSpec(
                    id=k,
                    shape=AgentShape.rectangle(entry.half_extent),
                    A=np.eye(2),
                    B=np.eye(2),
                    noise=NoiseModel.isotropic(entry.sigma_scale),
                    control_bound=entry.vmax,
                    start=entry.start,
                    goal=entry.goal,
                    feedback_gain=entry.feedback_gain if feedback_gain is None else feedback_gain,
                )
            )
        return GameSpec(tuple(agents), params, tuple(o.polytope() for o in self.obstacles))


# ---------------------------------------------------------------------------
# Built-in scenarios
# ---------------------------------------------------------------------------

_BUILTIN_ROUTES: Dict[str, List[Tuple[Vector, Vector]]] = {
    "opposing": [((10.0, 50.0), (95.0, 50.0)), ((90.0, 50.0), (5.0, 10.0))],
    "parallel": [((10.0, 70.0), (95.0, 70.0)), ((10.0, 35.0), (95.0, 35.0))],
    "intersection2": [((10.0, 50.0), (90.0, 50.0)), ((50.0, 10.0), (50.0, 90.0))],
    "intersection3": [
        ((50.0, 90.0), (50.0, 5.0)),
        ((85.0, 30.0), (11.0, 73.0)),
        ((14.0, 29.0), (90.0, 73.0)),
    ],
}


def builtin_names() -> List[str]:
    return list(_BUILTIN_ROUTES)


def builtin_scenario(name: str, feedback_gain: float = 0.0, corrected_opposing: bool = False) -> ScenarioFile:
    """One of the four experiment scenes on a [0, 100]^2 workspace with horizon 12."""
    if name not in _BUILTIN_ROUTES:
        raise ScenarioError(f"unknown scenario {name!r}; valid names: {', '.join(builtin_names())}", "name")
    routes = list(_BUILTIN_ROUTES[name])
    if name == "opposing" and corrected_opposing:
        # second goal placed behind the first agent's start
        routes[1] = (routes[1][0], (5.0, 50.0))
    settings = Settings.get_instance()
    defaults = PlanParams(
        horizon=12,
        big_m=settings.big_m,
        margin_cap=settings.margin_cap,
        legacy_margin=settings.legacy_margin,
    )
    agents = tuple(AgentEntry(start, goal, feedback_gain=float(feedback_gain)) for start, goal in routes)
    return ScenarioFile(name, (0.0, 0.0), (100.0, 100.0), agents, defaults).validate()


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_TOP_KEYS = {
    "format_version", "name", "workspace_min", "workspace_max", "horizon", "lambda",
    "big_m", "margin_cap", "goal_tolerance", "legacy_margin", "lambda_grid",
}
_AGENT_KEYS = {"start", "goal", "half_extent", "vmax", "sigma_scale", "feedback_gain"}
_OBSTACLE_KEYS = {"center", "half_extent"}


def _floats(raw: str, key: str, line: int) -> List[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ScenarioError(f"{key}: expected numbers, got {raw!r}", key, line) from None


def _vector(raw: str, key: str, line: int) -> Vector:
    values = _floats(raw, key, line)
    if len(values) != 2:
        raise ScenarioError(f"{key}: expected two comma-separated numbers", key, line)
    return values[0], values[1]


def _scalar(raw: str, key: str, line: int) -> float:
    values = _floats(raw, key, line)
    if len(values) != 1:
        raise ScenarioError(f"{key}: expected one number", key, line)
    return values[0]


def _boolean(raw: str, key: str, line: int) -> bool:
    value = raw.strip().lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise ScenarioError(f"{key}: expected true or false, got {raw!r}", key, line)


def _build_agent(values: Dict[str, Tuple[str, int]], block_line: int) -> AgentEntry:
    for key in ("start", "goal"):
        if key not in values:
            raise ScenarioError(f"[agent] block is missing {key}", key, block_line)
    kwargs = {}
    for key, (raw, line) in values.items():
        if key in ("start", "goal", "half_extent"):
            kwargs[key] = _vector(raw, key, line)
        else:
            kwargs[key] = _scalar(raw, key, line)
    return AgentEntry(**kwargs)


def _build_obstacle(values: Dict[str, Tuple[str, int]], block_line: int) -> ObstacleEntry:
    for key in ("center", "half_extent"):
        if key not in values:
            raise ScenarioError(f"[obstacle] block is missing {key}", key, block_line)
    center = _vector(values["center"][0], "center", values["center"][1])
    half = _vector(values["half_extent"][0], "half_extent", values["half_extent"][1])
    if min(half) <= 0:
        raise ScenarioError("obstacle half_extent must be positive", "half_extent", values["half_extent"][1])
    return ObstacleEntry(center, half)


def parse_scenario(text: str) -> ScenarioFile:
    """Parse and validate a scenario document."""
    top: Dict[str, Tuple[str, int]] = {}
    blocks: List[Tuple[str, int, Dict[str, Tuple[str, int]]]] = []

    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            kind = line[1:-1].strip().lower()
            if kind not in ("agent", "obstacle"):
                raise ScenarioError(f"unknown block [{kind}]", kind, number)
            blocks.append((kind, number, {}))
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {line!r}", "", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if blocks:
            kind, _, values = blocks[-1]
            allowed = _AGENT_KEYS if kind == "agent" else _OBSTACLE_KEYS
        else:
            values, allowed, kind = top, _TOP_KEYS, "top level"
        if key not in allowed:
            raise ScenarioError(f"unknown key {key!r} at {kind}", key, number)
        if key in values:
            raise ScenarioError(f"duplicate key {key!r}", key, number)
        values[key] = (value, number)

    for key in ("format_version", "name", "workspace_min", "workspace_max"):
        if key not in top:
            raise ScenarioError(f"missing required field {key}", key)
    version_raw, version_line = top["format_version"]
    if version_raw.strip() != str(FORMAT_VERSION):
        raise ScenarioError(f"unsupported format_version {version_raw!r}", "format_version", version_line)

    params = {}
    for key, target in (("horizon", "horizon"), ("lambda", "lam"), ("big_m", "big_m"),
                        ("margin_cap", "margin_cap"), ("goal_tolerance", "goal_tolerance")):
        if key in top:
            raw, line = top[key]
            value = _scalar(raw, key, line)
            if key == "horizon":
                if not value.is_integer():
                    raise ScenarioError(f"horizon: expected a whole number of steps, got {raw!r}", key, line)
                value = int(value)
            try:
                PlanParams(**{target: value})
            except ValueError as exc:
                raise ScenarioError(str(exc), key, line) from None
            params[target] = value
    if "legacy_margin" in top:
        params["legacy_margin"] = _boolean(top["legacy_margin"][0], "legacy_margin", top["legacy_margin"][1])
    defaults = PlanParams(**params)

    grid = DEFAULT_LAMBDA_GRID
    if "lambda_grid" in top:
        raw, line = top["lambda_grid"]
        grid = tuple(_floats(raw, "lambda_grid", line))
        bad = [lam for lam in grid if not 0.0 <= lam <= 1.0]
        if bad:
            raise ScenarioError(f"lambda_grid values must lie in [0, 1], got {bad}", "lambda_grid", line)

    agents, obstacles = [], []
    for kind, line, values in blocks:
        if kind == "agent":
            agents.append(_build_agent(values, line))
        else:
            obstacles.append(_build_obstacle(values, line))

    scenario = ScenarioFile(
        name=top["name"][0],
        workspace_min=_vector(top["workspace_min"][0], "workspace_min", top["workspace_min"][1]),
        workspace_max=_vector(top["workspace_max"][0], "workspace_max", top["workspace_max"][1]),
        agents=tuple(agents),
        defaults=defaults,
        lambda_grid=grid,
        obstacles=tuple(obstacles),
    )
    lines: LineMap = {(None, key): line for key, (_, line) in top.items()}
    for index, (_, line, values) in enumerate(b for b in blocks if b[0] == "agent"):
        lines[(index, "")] = line
        lines.update({(index, key): key_line for key, (_, key_line) in values.items()})
    return scenario.validate(lines)


def _pair(v: Vector) -> str:
    return f"{v[0]!r}, {v[1]!r}"


def serialize_scenario(scenario: ScenarioFile) -> str:
    d = scenario.defaults
    lines = [
        f"format_version = {scenario.format_version}",
        f"name = {scenario.name}",
        f"workspace_min = {_pair(scenario.workspace_min)}",
        f"workspace_max = {_pair(scenario.workspace_max)}",
        f"horizon = {d.horizon}",
        f"lambda = {d.lam!r}",
        f"big_m = {d.big_m!r}",
        f"margin_cap = {d.margin_cap!r}",
        f"goal_tolerance = {d.goal_tolerance!r}",
        f"legacy_margin = {'true' if d.legacy_margin else 'false'}",
        "lambda_grid = " + ", ".join(repr(lam) for lam in scenario.lambda_grid),
    ]
    for agent in scenario.agents:
        lines += [
            "[agent]",
            f"start = {_pair(agent.start)}",
            f"goal = {_pair(agent.goal)}",
            f"half_extent = {_pair(agent.half_extent)}",
            f"vmax = {agent.vmax!r}",
            f"sigma_scale = {agent.sigma_scale!r}",
            f"feedback_gain = {agent.feedback_gain!r}",
        ]
    for obstacle in scenario.obstacles:
        lines += ["[obstacle]", f"center = {_pair(obstacle.center)}", f"half_extent = {_pair(obstacle.half_extent)}"]
    return "\n".join(lines) + "\n"


def load_scenario(name_or_path: str, feedback_gain: Optional[float] = None, corrected_opposing: bool = False) -> ScenarioFile:
    """A built-in by name, otherwise a scenario file path."""
    if name_or_path in _BUILTIN_ROUTES:
        return builtin_scenario(name_or_path, feedback_gain or 0.0, corrected_opposing)
    with open(name_or_path, "r", encoding="utf-8") as fh:
        scenario = parse_scenario(fh.read())
    logger.debug("Loaded scenario %s from %s", scenario.name, name_or_path)
    return scenario
