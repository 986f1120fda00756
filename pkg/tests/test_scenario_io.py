import sys
import os
import csv
import dataclasses
import math
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.settings import Settings
from game import Profile
from milp import SolveOptions
from planner import Plan, PlanParams
from scenario_io import (
    CSV_HEADER,
    DEFAULT_LAMBDA_GRID,
    AgentEntry,
    ObstacleEntry,
    ScenarioError,
    ScenarioFile,
    SweepOptions,
    builtin_names,
    builtin_scenario,
    load_profile,
    load_scenario,
    parse_scenario,
    plot_sweep,
    profile_from_json,
    profile_to_json,
    render_svg,
    run_sweep,
    save_profile,
    serialize_scenario,
    write_sweep_csv,
)

SAMPLE = """\
# two agents passing a block
format_version = 1
name = sample
workspace_min = 0, 0
workspace_max = 50, 50
horizon = 6
lambda = 0.5
lambda_grid = 0.5, 1.0

[agent]
start = 5, 10
goal = 45, 10
half_extent = 2, 2
[agent]
start = 5, 40   # upper lane
goal = 45, 40
half_extent = 2, 2
vmax = 10
[obstacle]
center = 25, 25
half_extent = 3, 3
"""


def _plan(agent_id: int, lam: float = 0.5) -> Plan:
    return Plan(
        agent_id=agent_id,
        controls=((10.0, 0.0), (10.0, 0.0)),
        expected_trajectory=((0.0, 10.0 * agent_id), (10.0, 10.0 * agent_id), (20.0, 10.0 * agent_id)),
        goal_step=2,
        goal_indicators=(0, 0, 1),
        margins={("obstacle0", 0): 4.0, ("obstacle0", 1): 1.25},
        selected_faces={("obstacle0", 0): 3, ("obstacle0", 1): 0},
        safety_term=-5.25,
        time_term=2.0,
        objective=lam * 2.0 + (1.0 - lam) * -5.25,
        risk_bound=0.04,
        lam=lam,
    )


class ScenarioTestCase(unittest.TestCase):
    def setUp(self):
        Settings._reset_instance()

    def tearDown(self):
        Settings._reset_instance()


class TestBuiltins(ScenarioTestCase):
    def test_names(self):
        self.assertEqual(builtin_names(), ["opposing", "parallel", "intersection2", "intersection3"])

    def test_opposing(self):
        s = builtin_scenario("opposing")
        self.assertEqual(s.agents[0].start, (10.0, 50.0))
        self.assertEqual(s.agents[1].goal, (5.0, 10.0))
        self.assertEqual(s.defaults.horizon, 12)
        self.assertEqual(s.workspace_max, (100.0, 100.0))
        self.assertEqual(s.lambda_grid, DEFAULT_LAMBDA_GRID)

    def test_corrected_opposing(self):
        s = builtin_scenario("opposing", corrected_opposing=True)
        self.assertEqual(s.agents[1].goal, (5.0, 50.0))

    def test_intersection3(self):
        s = builtin_scenario("intersection3")
        self.assertEqual(len(s.agents), 3)
        game = s.to_game()
        self.assertEqual(game.ids, [0, 1, 2])

    def test_feedback_gain_applies_to_every_agent(self):
        game = builtin_scenario("parallel", feedback_gain=0.3).to_game()
        self.assertEqual([a.feedback_gain for a in game.agents], [0.3, 0.3])

    def test_unknown_name(self):
        with self.assertRaises(ScenarioError):
            builtin_scenario("roundabout")

    def test_default_grid(self):
        self.assertEqual(DEFAULT_LAMBDA_GRID, (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9))

    def test_load_by_name(self):
        self.assertEqual(load_scenario("parallel").name, "parallel")


class TestScenarioValidation(ScenarioTestCase):
    def _scenario(self, **changes):
        fields = dict(
            name="x",
            workspace_min=(0.0, 0.0),
            workspace_max=(100.0, 100.0),
            agents=(AgentEntry((10.0, 50.0), (95.0, 50.0)),),
        )
        fields.update(changes)
        return ScenarioFile(**fields)

    def test_start_outside_workspace(self):
        with self.assertRaises(ScenarioError) as ctx:
            self._scenario(agents=(AgentEntry((-5.0, 50.0), (95.0, 50.0)),)).validate()
        self.assertEqual(ctx.exception.field, "start")

    def test_lambda_out_of_range(self):
        with self.assertRaises(ScenarioError) as ctx:
            self._scenario(lambda_grid=(0.5, 1.5)).validate()
        self.assertEqual(ctx.exception.field, "lambda_grid")

    def test_unsorted_grid(self):
        with self.assertRaises(ScenarioError):
            self._scenario(lambda_grid=(0.5, 0.1)).validate()

    def test_duplicate_starts(self):
        agents = (AgentEntry((10.0, 50.0), (95.0, 50.0)), AgentEntry((10.0, 50.0), (95.0, 10.0)))
        with self.assertRaises(ScenarioError):
            self._scenario(agents=agents).validate()

    def test_inverted_workspace(self):
        with self.assertRaises(ScenarioError):
            self._scenario(workspace_min=(100.0, 0.0), workspace_max=(0.0, 100.0)).validate()

    def test_to_game_overrides(self):
        game = self._scenario().to_game(lam=0.9, horizon=10, legacy_margin=True)
        self.assertEqual(game.params.lam, 0.9)
        self.assertEqual(game.params.horizon, 10)
        self.assertTrue(game.params.legacy_margin)
        np.testing.assert_allclose(game.agents[0].noise.sigma, 1.9 * np.eye(2))


class TestScenarioText(ScenarioTestCase):
    def test_parse_sample(self):
        s = parse_scenario(SAMPLE)
        self.assertEqual(s.name, "sample")
        self.assertEqual(len(s.agents), 2)
        self.assertEqual(s.agents[1].start, (5.0, 40.0))
        self.assertEqual(s.agents[0].vmax, 10.0)
        self.assertEqual(s.defaults.horizon, 6)
        self.assertEqual(s.lambda_grid, (0.5, 1.0))
        self.assertEqual(s.obstacles, (ObstacleEntry((25.0, 25.0), (3.0, 3.0)),))
        self.assertEqual(len(s.to_game().obstacles), 1)

    def test_serialize_then_parse(self):
        s = parse_scenario(SAMPLE)
        self.assertEqual(parse_scenario(serialize_scenario(s)), s)

    def test_builtin_serializes(self):
        s = builtin_scenario("intersection3")
        self.assertEqual(parse_scenario(serialize_scenario(s)), s)

    def test_unknown_key_reports_line(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("vmax = 10", "speed = 10"))
        self.assertEqual(ctx.exception.field, "speed")
        self.assertEqual(ctx.exception.line, 18)
        self.assertTrue(str(ctx.exception).startswith("line 18: "))

    def test_duplicate_key(self):
        with self.assertRaises(ScenarioError):
            parse_scenario(SAMPLE.replace("horizon = 6", "horizon = 6\nhorizon = 7"))

    def test_missing_required(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("name = sample\n", ""))
        self.assertEqual(ctx.exception.field, "name")

    def test_wrong_version(self):
        with self.assertRaises(ScenarioError):
            parse_scenario(SAMPLE.replace("format_version = 1", "format_version = 2"))

    def test_grid_out_of_range(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("lambda_grid = 0.5, 1.0", "lambda_grid = 0.5, 1.5"))
        self.assertEqual(ctx.exception.field, "lambda_grid")

    def test_bad_params(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("lambda = 0.5", "lambda = 2"))
        self.assertEqual(ctx.exception.field, "lambda")
        self.assertEqual(ctx.exception.line, 7)
        self.assertTrue(str(ctx.exception).startswith("line 7: "))

    def test_fractional_horizon(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("horizon = 6", "horizon = 12.7"))
        self.assertEqual((ctx.exception.field, ctx.exception.line), ("horizon", 6))

    def test_whole_float_horizon(self):
        scenario = parse_scenario(SAMPLE.replace("horizon = 6", "horizon = 8.0"))
        self.assertEqual(scenario.defaults.horizon, 8)
        self.assertIsInstance(scenario.defaults.horizon, int)

    def test_start_outside_workspace_reports_line(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("start = 5, 10", "start = -5, 50"))
        self.assertEqual((ctx.exception.field, ctx.exception.line), ("start", 11))

    def test_agent_field_reports_its_block(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("vmax = 10", "vmax = 0"))
        self.assertEqual((ctx.exception.field, ctx.exception.line), ("vmax", 18))

    def test_shared_start_reports_second_agent(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("start = 5, 40   # upper lane", "start = 5, 10"))
        self.assertEqual((ctx.exception.field, ctx.exception.line), ("start", 15))

    def test_unsorted_grid_reports_line(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("lambda_grid = 0.5, 1.0", "lambda_grid = 1.0, 0.5"))
        self.assertEqual((ctx.exception.field, ctx.exception.line), ("lambda_grid", 8))

    def test_unknown_block(self):
        with self.assertRaises(ScenarioError):
            parse_scenario(SAMPLE + "[robot]\n")

    def test_agent_without_goal(self):
        with self.assertRaises(ScenarioError) as ctx:
            parse_scenario(SAMPLE.replace("goal = 45, 40\n", ""))
        self.assertEqual(ctx.exception.field, "goal")

    def test_non_numeric_vector(self):
        with self.assertRaises(ScenarioError):
            parse_scenario(SAMPLE.replace("center = 25, 25", "center = 25, middle"))

    def test_load_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "sample.scn")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(SAMPLE)
            self.assertEqual(load_scenario(path).name, "sample")

    def test_missing_file(self):
        with self.assertRaises(OSError):
            load_scenario(os.path.join(tempfile.gettempdir(), "no-such-scenario.scn"))


class TestProfileIO(unittest.TestCase):
    def test_save_and_load(self):
        profile = Profile((_plan(0), _plan(1)), PlanParams(horizon=6))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "profile.json")
            save_profile(profile, path)
            loaded = load_profile(path)
        self.assertEqual(loaded.params, profile.params)
        self.assertEqual([p.agent_id for p in loaded.plans], [0, 1])
        plan = loaded.plan_for(1)
        self.assertEqual(plan.controls, _plan(1).controls)
        self.assertEqual(plan.margins, _plan(1).margins)
        self.assertEqual(plan.selected_faces, _plan(1).selected_faces)
        self.assertEqual(plan.risk_bound, 0.04)

    def test_invalid_json(self):
        with self.assertRaises(ScenarioError):
            profile_from_json("{not json")

    def test_wrong_version(self):
        text = profile_to_json(Profile((_plan(0),), PlanParams())).replace('"format_version": 1', '"format_version": 9')
        with self.assertRaises(ScenarioError):
            profile_from_json(text)

    def test_missing_fields(self):
        with self.assertRaises(ScenarioError):
            profile_from_json('{"format_version": 1, "params": {}, "plans": [{"agent_id": 0}]}')

    def test_empty_profile(self):
        with self.assertRaises(ScenarioError):
            profile_from_json('{"format_version": 1, "params": {}, "plans": []}')


class TestRender(ScenarioTestCase):
    def setUp(self):
        super().setUp()
        self.scenario = ScenarioFile(
            name="a&b",
            workspace_min=(0.0, 0.0),
            workspace_max=(50.0, 50.0),
            agents=(AgentEntry((0.0, 0.0), (20.0, 0.0)), AgentEntry((0.0, 10.0), (20.0, 10.0))),
            obstacles=(ObstacleEntry((30.0, 30.0), (2.0, 2.0)),),
        )
        self.profile = Profile((_plan(0), _plan(1)), PlanParams())

    def test_svg_document(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "plan.svg")
            doc = render_svg(self.scenario, self.profile, path)
            with open(path, encoding="utf-8") as fh:
                self.assertEqual(fh.read(), doc)
        self.assertIn('viewBox="0 0 50 50"', doc)
        self.assertIn("<title>a&amp;b</title>", doc)
        self.assertEqual(doc.count("<polyline"), 2)
        self.assertTrue(doc.rstrip().endswith("</svg>"))

    def test_deterministic(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = render_svg(self.scenario, self.profile, os.path.join(tmp, "a.svg"))
            second = render_svg(self.scenario, self.profile, os.path.join(tmp, "b.svg"))
        self.assertEqual(first, second)

    def test_empty_profile(self):
        empty = Profile((), PlanParams())
        with self.assertRaises(ValueError):
            render_svg(self.scenario, empty, os.path.join(tempfile.gettempdir(), "unused.svg"))


class TestSweep(ScenarioTestCase):
    def setUp(self):
        super().setUp()
        self.options = SweepOptions(
            trials=50, max_rounds=5, backend="scipy", solve_options=SolveOptions(time_limit=60.0)
        )

    def test_rows_and_csv(self):
        scenario = parse_scenario(SAMPLE)
        rows = run_sweep(scenario, self.options)
        self.assertEqual(len(rows), 2 * 2 * 3)
        self.assertEqual([(r.lam, r.mode) for r in rows[:3]], [(0.5, "equilibrium")] * 3)
        self.assertEqual([r.agent_id for r in rows[:3]], [0, 1, "mean"])
        self.assertEqual({r.mode for r in rows}, {"equilibrium", "social"})
        for row in rows:
            self.assertFalse(row.solver_status.startswith("error"))
            self.assertTrue(math.isfinite(row.J))
        social = [r for r in rows if r.mode == "social"]
        self.assertTrue(all(r.rounds == 0 for r in social))
        mean = rows[2]
        self.assertAlmostEqual(mean.J, (rows[0].J + rows[1].J) / 2.0)

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "sweep.csv")
            write_sweep_csv(rows, path)
            with open(path, newline="", encoding="utf-8") as fh:
                table = list(csv.reader(fh))
            figure = os.path.join(tmp, "sweep.png")
            plot_sweep(rows, figure)
            self.assertGreater(os.path.getsize(figure), 0)
        self.assertEqual(table[0], CSV_HEADER)
        self.assertEqual(len(table), len(rows) + 1)
        self.assertEqual(table[1][:3], ["sample", "0.5", "equilibrium"])

    def test_setup_failure_becomes_error_rows(self):
        text = SAMPLE.replace("center = 25, 25", "center = 45, 10")
        rows = run_sweep(parse_scenario(text), SweepOptions(trials=10, backend="scipy", modes=("social",)))
        self.assertEqual(len(rows), 2 * 3)
        for row in rows:
            self.assertEqual(row.solver_status, "error:InfeasibleSetupError")
            self.assertTrue(math.isnan(row.J))

    def test_unknown_mode(self):
        with self.assertRaises(ValueError):
            SweepOptions(modes=("cooperative",))

    @unittest.skipUnless(os.environ.get("PPG_ACCEPTANCE") == "1", "set PPG_ACCEPTANCE=1 for full-size sweeps")
    def test_full_opposing_sweep(self):
        rows = run_sweep(builtin_scenario("opposing"), SweepOptions(trials=1000, workers=4, backend="scipy"))
        self.assertEqual(len(rows), 9 * 2 * 3)


@unittest.skipUnless(os.environ.get("PPG_ACCEPTANCE") == "1", "set PPG_ACCEPTANCE=1 for full-size sweeps")
class TestEquilibriumVersusSocial(ScenarioTestCase):
    GRID = (0.1, 0.3, 0.5)

    def _sweep(self, name):
        scenario = dataclasses.replace(builtin_scenario(name), lambda_grid=self.GRID)
        options = SweepOptions(horizon=12, feedback_gain=0.0, trials=200, max_rounds=20, backend="scipy")
        return run_sweep(scenario, options)

    def test_equilibrium_trades_safety_for_speed(self):
        for name in ("opposing", "parallel"):
            rows = self._sweep(name)
            means = {(r.lam, r.mode): r for r in rows if r.agent_id == "mean"}
            for lam in self.GRID:
                eq, opt = means[(lam, "equilibrium")], means[(lam, "social")]
                if eq.solver_status != "optimal" or opt.solver_status != "optimal":
                    continue
                self.assertGreaterEqual(eq.G, opt.G - 1e-6, f"{name} lambda={lam}")
                self.assertLessEqual(eq.T_goal, opt.T_goal + 1e-6, f"{name} lambda={lam}")
                self.assertLessEqual(opt.J, eq.J + 2e-6 * max(1.0, abs(eq.J)), f"{name} lambda={lam}")

    def test_repeated_sweep_is_byte_identical(self):
        with tempfile.TemporaryDirectory() as tmp:
            paths = [os.path.join(tmp, f"run{k}.csv") for k in range(2)]
            for path in paths:
                write_sweep_csv(self._sweep("opposing"), path)
            with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
                self.assertEqual(a.read(), b.read())


if __name__ == "__main__":
    unittest.main()
