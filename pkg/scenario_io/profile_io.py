import json
import logging
from typing import Any, Dict

from game import Profile
from planner import Plan, PlanParams

from .scenario import ScenarioError

logger = logging.getLogger(__name__)

PROFILE_FORMAT_VERSION = 1


def _plan_to_dict(plan: Plan) -> Dict[str, Any]:
    return {
        "agent_id": plan.agent_id,
        "controls": [list(u) for u in plan.controls],
        "expected_trajectory": [list(r) for r in plan.expected_trajectory],
        "goal_step": plan.goal_step,
        "goal_indicators": list(plan.goal_indicators),
        "margins": [
            {"label": label, "t": t, "s": s, "face": plan.selected_faces.get((label, t), 0)}
            for (label, t), s in sorted(plan.margins.items())
        ],
        "safety_term": plan.safety_term,
        "time_term": plan.time_term,
        "objective": plan.objective,
        "risk_bound": plan.risk_bound,
        "lam": plan.lam,
        "status": plan.status,
        "gap": plan.gap,
    }


def _plan_from_dict(data: Dict[str, Any]) -> Plan:
    margins = {(m["label"], int(m["t"])): float(m["s"]) for m in data.get("margins", [])}
    faces = {(m["label"], int(m["t"])): int(m.get("face", 0)) for m in data.get("margins", [])}
    return Plan(
        agent_id=int(data["agent_id"]),
        controls=tuple((float(u[0]), float(u[1])) for u in data["controls"]),
        expected_trajectory=tuple((float(r[0]), float(r[1])) for r in data["expected_trajectory"]),
        goal_step=int(data["goal_step"]),
        goal_indicators=tuple(int(d) for d in data["goal_indicators"]),
        margins=margins,
        selected_faces=faces,
        safety_term=float(data["safety_term"]),
        time_term=float(data["time_term"]),
        objective=float(data["objective"]),
        risk_bound=float(data["risk_bound"]),
        lam=float(data["lam"]),
        status=data.get("status", "optimal"),
        gap=float(data.get("gap", 0.0)),
    )


def profile_to_json(profile: Profile) -> str:
    p = profile.params
    doc = {
        "format_version": PROFILE_FORMAT_VERSION,
        "params": {
            "horizon": p.horizon,
            "lam": p.lam,
            "big_m": p.big_m,
            "margin_cap": p.margin_cap,
            "goal_tolerance": p.goal_tolerance,
            "legacy_margin": p.legacy_margin,
        },
        "status": profile.status,
        "gap": profile.gap,
        "plans": [_plan_to_dict(plan) for plan in profile.plans],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def profile_from_json(text: str) -> Profile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"profile is not valid JSON: {exc.msg}", "profile", exc.lineno) from None
    if doc.get("format_version") != PROFILE_FORMAT_VERSION:
        raise ScenarioError(f"unsupported profile format_version {doc.get('format_version')!r}", "format_version")
    try:
        params = PlanParams(**doc["params"])
        plans = tuple(_plan_from_dict(item) for item in doc["plans"])
    except (KeyError, TypeError, IndexError) as exc:
        raise ScenarioError(f"malformed profile document: {exc}", "plans") from None
    if not plans:
        raise ScenarioError("profile holds no plans", "plans")
    return Profile(plans, params, doc.get("status", "optimal"), float(doc.get("gap", 0.0)))


def save_profile(profile: Profile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(profile_to_json(profile))
    logger.debug("Saved profile with %d plans to %s", len(profile), path)


def load_profile(path: str) -> Profile:
    with open(path, "r", encoding="utf-8") as fh:
        return profile_from_json(fh.read())
