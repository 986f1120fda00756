from .profile_io import load_profile, profile_from_json, profile_to_json, save_profile
from .render import plot_sweep, render_svg
from .scenario import (
    DEFAULT_LAMBDA_GRID,
    FORMAT_VERSION,
    AgentEntry,
    ObstacleEntry,
    ScenarioError,
    ScenarioFile,
    builtin_names,
    builtin_scenario,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)
from .sweep import CSV_HEADER, MODES, SweepOptions, SweepRow, run_sweep, write_sweep_csv

__all__ = [
    "CSV_HEADER",
    "DEFAULT_LAMBDA_GRID",
    "FORMAT_VERSION",
    "MODES",
    "AgentEntry",
    "ObstacleEntry",
    "ScenarioError",
    "ScenarioFile",
    "SweepOptions",
    "SweepRow",
    "builtin_names",
    "builtin_scenario",
    "load_profile",
    "load_scenario",
    "parse_scenario",
    "plot_sweep",
    "profile_from_json",
    "profile_to_json",
    "render_svg",
    "run_sweep",
    "save_profile",
    "serialize_scenario",
    "write_sweep_csv",
]
