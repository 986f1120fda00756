import argparse
import dataclasses
import json
import logging
import sys
from typing import List, Optional

from config.settings import Settings
from game import (
    GameError,
    GameSpec,
    Profile,
    best_response_dynamics,
    compare_outcomes,
    social_optimum,
    verify_equilibrium,
)
from geometry import box
from milp import MilpError, SolveOptions
from montecarlo import RolloutConfig, rollout, validate_bound, write_trajectories_csv
from planner import InfeasibleSetupError, NoPlanError, PlanVerificationError, best_response, plan_single
from scenario_io import (
    ScenarioError,
    SweepOptions,
    builtin_names,
    load_profile,
    load_scenario,
    plot_sweep,
    render_svg,
    run_sweep,
    save_profile,
    write_sweep_csv,
)

from .logging_setup import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4
EXIT_IO = 5


class UsageError(ValueError):
    """Flags that are malformed or do not make sense together."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _obstacle(raw: str):
    try:
        cx, cy, hx, hy = (float(part) for part in raw.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected cx,cy,hx,hy, got {raw!r}") from None
    try:
        return box((cx, cy), (hx, hy))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--scenario", default="opposing", help="built-in name or scenario file")
    common.add_argument("--lambda", dest="lam", type=float, help="time/safety weight in [0, 1]")
    common.add_argument("--horizon", type=int, help="planning horizon in steps")
    common.add_argument("--feedback-gain", type=float, help="override every agent's feedback gain")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--time-limit", type=float)
    common.add_argument("--node-limit", type=int)
    common.add_argument("--backend", choices=["bnb", "scipy"])
    common.add_argument("--out", help="output path")
    common.add_argument("--dump-lp", help="write the MILP in LP text format to this path")
    common.add_argument("--legacy-margin", action="store_true", default=None, help="margin coefficient without sqrt(2)")
    common.add_argument("--corrected-opposing", action="store_true", help="use goal (5,50) in the opposing scene")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    return common


def _add_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--profile", help="saved profile JSON")
    source.add_argument("--solve", choices=["equilibrium", "social"], help="compute the profile first")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="ppg", description="Chance-constrained path planning games")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="single agent against static obstacles")
    p.add_argument("--agent", type=int, default=0)
    p.add_argument("--obstacle", type=_obstacle, action="append", default=[], metavar="CX,CY,HX,HY")

    p = sub.add_parser("respond", parents=[common], help="best response against a saved profile")
    p.add_argument("--agent", type=int, default=0)
    p.add_argument("--profile", required=True)

    p = sub.add_parser("equilibrium", parents=[common], help="best-response dynamics")
    p.add_argument("--max-rounds", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--shuffle-order", action="store_true", help="random update order seeded by --seed")
    p.add_argument("--verify", type=float, metavar="EPSILON", help="certify the result as epsilon-Nash")
    p.add_argument("--compare", action="store_true", help="also solve the social optimum and compare")

    sub.add_parser("social", parents=[common], help="joint social-optimum program")

    p = sub.add_parser("sweep", parents=[common], help="lambda sweep to CSV")
    p.add_argument("--max-rounds", type=int, default=50)
    p.add_argument("--shuffle-order", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--plot", help="write a figure of the sweep to this path")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo rollout of a profile")
    _add_source(p)
    p.add_argument("--trajectories", help="CSV dump of every simulated trajectory")

    p = sub.add_parser("render", parents=[common], help="SVG of a profile")
    _add_source(p)

    sub.add_parser("scenarios", help="list built-in scenarios")
    return parser


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _emit(data) -> None:
    print(json.dumps(data, sort_keys=True))


def _options(args) -> SolveOptions:
    settings = Settings.get_instance()
    return SolveOptions(
        gap_tol=settings.gap_tol,
        node_limit=args.node_limit or settings.node_limit,
        time_limit=args.time_limit or settings.time_limit,
    )


def _scenario(args):
    if args.corrected_opposing and args.scenario != "opposing":
        raise UsageError("--corrected-opposing only applies to the opposing scenario")
    return load_scenario(args.scenario, args.feedback_gain, args.corrected_opposing)


def _game(args, scenario=None) -> GameSpec:
    scenario = scenario or _scenario(args)
    return scenario.to_game(args.lam, args.horizon, args.feedback_gain, args.legacy_margin)


def _plan_summary(plan) -> dict:
    return {
        "agent_id": plan.agent_id,
        "T_goal": plan.goal_step,
        "G": plan.safety_term,
        "J": plan.objective,
        "risk_bound": plan.risk_bound,
        "status": plan.status,
    }


def _profile_for(args, game: GameSpec) -> Profile:
    if getattr(args, "profile", None):
        profile = load_profile(args.profile)
        if sorted(p.agent_id for p in profile.plans) != sorted(game.ids):
            raise UsageError("profile does not match the scenario's agents")
        return profile
    if args.solve == "social":
        return social_optimum(game, _options(args), args.backend, args.dump_lp)
    return best_response_dynamics(game, options=_options(args), backend=args.backend).profile


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_plan(args) -> int:
    scenario = _scenario(args)
    game = _game(args, scenario)
    agent = game.agent(args.agent)
    plan = plan_single(agent, list(game.obstacles) + args.obstacle, game.params, _options(args), args.backend, args.dump_lp)
    if args.out:
        save_profile(Profile((plan,), game.params, plan.status, plan.gap), args.out)
    _emit(_plan_summary(plan))
    return EXIT_OK


def cmd_respond(args) -> int:
    game = _game(args)
    profile = load_profile(args.profile)
    agent = game.agent(args.agent)
    others = [(game.agent(p.agent_id), p) for p in profile.plans if p.agent_id != agent.id]
    plan = best_response(agent, others, game.params, game.obstacles, _options(args), args.backend, args.dump_lp)
    if args.out:
        plans = [p for p in profile.plans if p.agent_id != agent.id] + [plan]
        save_profile(Profile(tuple(plans), game.params, plan.status, plan.gap), args.out)
    _emit(_plan_summary(plan))
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    game = _game(args)
    order_seed = args.seed if args.shuffle_order else None
    result = best_response_dynamics(game, args.max_rounds, args.tol, order_seed, _options(args), args.backend)
    summary = {
        "rounds": result.rounds,
        "converged": result.converged,
        "epsilon": result.epsilon,
        "plans": [_plan_summary(p) for p in result.profile.plans],
    }
    if args.verify is not None:
        ok, slacks = verify_equilibrium(game, result.profile, args.verify, _options(args), args.backend)
        summary["verified"] = ok
        summary["slack"] = {str(k): v.value for k, v in slacks.items()}
    if args.compare:
        optimum = social_optimum(game, _options(args), args.backend, args.dump_lp)
        summary["comparison"] = compare_outcomes(result, optimum).as_dict()
    if args.out:
        save_profile(result.profile, args.out)
    _emit(summary)
    return EXIT_OK


def cmd_social(args) -> int:
    game = _game(args)
    profile = social_optimum(game, _options(args), args.backend, args.dump_lp)
    if args.out:
        save_profile(profile, args.out)
    _emit({"status": profile.status, "gap": profile.gap, "plans": [_plan_summary(p) for p in profile.plans]})
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.out:
        raise UsageError("sweep needs --out for the CSV file")
    scenario = _scenario(args)
    if args.lam is not None:
        scenario = dataclasses.replace(scenario, lambda_grid=(args.lam,)).validate()
    options = SweepOptions(
        horizon=args.horizon,
        feedback_gain=args.feedback_gain,
        legacy_margin=args.legacy_margin,
        trials=args.trials,
        seed=args.seed,
        max_rounds=args.max_rounds,
        order_seed=args.seed if args.shuffle_order else None,
        solve_options=_options(args),
        backend=args.backend,
        workers=args.workers,
    )
    rows = run_sweep(scenario, options)
    write_sweep_csv(rows, args.out)
    if args.plot:
        plot_sweep(rows, args.plot)
    _emit({"rows": len(rows), "out": args.out})
    return EXIT_OK


def cmd_simulate(args) -> int:
    game = _game(args)
    profile = _profile_for(args, game)
    report = rollout(game, profile, RolloutConfig(args.trials, args.seed, bool(args.trajectories)))
    if args.trajectories:
        write_trajectories_csv(report, args.trajectories)
    summary = report.as_dict()
    summary["bound_holds"] = validate_bound(report, profile)
    summary["risk_bound"] = sum(p.risk_bound for p in profile.plans)
    _emit(summary)
    return EXIT_OK


def cmd_render(args) -> int:
    if not args.out:
        raise UsageError("render needs --out for the SVG file")
    scenario = _scenario(args)
    game = _game(args, scenario)
    render_svg(scenario, _profile_for(args, game), args.out)
    _emit({"out": args.out})
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for name in builtin_names():
        print(name)
    return EXIT_OK


_COMMANDS = {
    "plan": cmd_plan,
    "respond": cmd_respond,
    "equilibrium": cmd_equilibrium,
    "social": cmd_social,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "render": cmd_render,
    "scenarios": cmd_scenarios,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _diagnose(kind: str, exc: BaseException) -> None:
    message = " ".join(str(exc).split())
    print(f"error kind={kind} message={message}", file=sys.stderr)


def _status_code(status: str) -> int:
    return EXIT_INFEASIBLE if status == "infeasible" else EXIT_LIMIT


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _diagnose("usage", exc)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        settings = Settings.get_instance()
    except ValueError as exc:
        _diagnose("config", exc)
        return EXIT_USAGE
    configure_logging(getattr(args, "log_level", None) or settings.log_level, settings.log_format)

    try:
        return _COMMANDS[args.command](args)
    except InfeasibleSetupError as exc:
        _diagnose("infeasible", exc)
        return EXIT_INFEASIBLE
    except NoPlanError as exc:
        _diagnose(exc.status, exc)
        return _status_code(exc.status)
    except GameError as exc:
        if not exc.status:
            _diagnose("game", exc)
            return EXIT_INTERNAL
        _diagnose(exc.status, exc)
        return _status_code(exc.status)
    except (UsageError, ScenarioError, KeyError) as exc:
        _diagnose("usage", exc)
        return EXIT_USAGE
    except OSError as exc:
        _diagnose("io", exc)
        return EXIT_IO
    except (MilpError, PlanVerificationError) as exc:
        logger.exception("Internal solver failure")
        _diagnose("internal", exc)
        return EXIT_INTERNAL
    except ValueError as exc:
        _diagnose("usage", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
