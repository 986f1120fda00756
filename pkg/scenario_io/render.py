import logging
from typing import Dict, List, Sequence
from xml.sax.saxutils import escape

import numpy as np

from game import Profile

from .scenario import ScenarioFile
from .sweep import SweepRow

logger = logging.getLogger(__name__)

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _n(value: float) -> str:
    return format(float(value), ".6g")


def render_svg(scenario: ScenarioFile, profile: Profile, path: str) -> str:
    """Write expected trajectories, per-step agent boxes and goals as SVG; returns the document."""
    if not len(profile):
        raise ValueError("cannot render an empty profile")
    (x0, y0), (x1, y1) = scenario.workspace_min, scenario.workspace_max
    width, height = x1 - x0, y1 - y0
    out: List[str] = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_n(x0)} {_n(y0)} {_n(width)} {_n(height)}" '
        f'width="{_n(width * 5)}" height="{_n(height * 5)}">',
        f'<title>{escape(scenario.name)}</title>',
        # workspace y axis points up
        f'<g transform="translate(0 {_n(y0 + y1)}) scale(1 -1)">',
        f'<rect x="{_n(x0)}" y="{_n(y0)}" width="{_n(width)}" height="{_n(height)}" '
        'fill="none" stroke="#000000" stroke-width="0.4"/>',
    ]
    for obstacle in scenario.obstacles:
        (cx, cy), (hx, hy) = obstacle.center, obstacle.half_extent
        out.append(
            f'<rect x="{_n(cx - hx)}" y="{_n(cy - hy)}" width="{_n(2 * hx)}" height="{_n(2 * hy)}" '
            'fill="#7f7f7f" fill-opacity="0.6"/>'
        )

    for plan in profile.plans:
        color = _COLORS[plan.agent_id % len(_COLORS)]
        entry = scenario.agents[plan.agent_id]
        hx, hy = entry.half_extent
        steps = len(plan.expected_trajectory)
        for t, (x, y) in enumerate(plan.expected_trajectory):
            opacity = 0.1 + 0.5 * (t + 1) / steps
            out.append(
                f'<rect x="{_n(x - hx)}" y="{_n(y - hy)}" width="{_n(2 * hx)}" height="{_n(2 * hy)}" '
                f'fill="{color}" fill-opacity="{_n(opacity * 0.3)}" stroke="{color}" '
                f'stroke-opacity="{_n(opacity)}" stroke-width="0.2"/>'
            )
        points = " ".join(f"{_n(x)},{_n(y)}" for x, y in plan.expected_trajectory)
        out.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="0.6"/>')
        gx, gy = entry.goal
        out.append(
            f'<path d="M {_n(gx - 2)} {_n(gy - 2)} L {_n(gx + 2)} {_n(gy + 2)} '
            f'M {_n(gx - 2)} {_n(gy + 2)} L {_n(gx + 2)} {_n(gy - 2)}" stroke="{color}" stroke-width="0.6"/>'
        )
    out += ["</g>", "</svg>"]
    document = "\n".join(out) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(document)
    logger.debug("Rendered %d plans to %s", len(profile), path)
    return document


def _mean_series(rows: Sequence[SweepRow], mode: str, column: str):
    picked = sorted((r.lam, getattr(r, column)) for r in rows if r.mode == mode and r.agent_id == "mean")
    return np.array([p[0] for p in picked]), np.array([p[1] for p in picked], dtype=float)


def plot_sweep(rows: Sequence[SweepRow], path: str) -> None:
    """Objective, time to goal and safety term against lambda, equilibrium vs social optimum."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels: Dict[str, str] = {"J": "objective J", "T_goal": "time to goal T", "G": "safety term G"}
    fig, axs = plt.subplots(ncols=3, figsize=(12.0, 3.6))
    for ax, (column, label) in zip(axs, panels.items()):
        for mode, marker in (("equilibrium", "o-"), ("social", "s--")):
            lam, values = _mean_series(rows, mode, column)
            if len(lam):
                ax.plot(lam, values, marker, label=mode)
        ax.set_xlabel("lambda")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axs[0].legend(loc="best")
    scenario = rows[0].scenario if rows else ""
    fig.suptitle(f"{scenario}: mean over agents")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    logger.info("Wrote sweep figure to %s", path)
