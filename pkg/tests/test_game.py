import sys
import os
import math
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.settings import Settings
from game import (
    EquilibriumResult,
    GameSpec,
    OutcomeReport,
    Profile,
    best_response_dynamics,
    compare_outcomes,
    encode_mp3,
    initial_profile,
    profile_objectives,
    refresh_profile,
    social_optimum,
    verify_equilibrium,
)
from geometry import box
from milp import SolveOptions
from planner import AgentSpec, Plan, PlanParams, evaluate_plan
from scenario_io import builtin_names, builtin_scenario


def straight_plan(agent: AgentSpec, steps: int, lam: float) -> Plan:
    start, goal = np.asarray(agent.start), np.asarray(agent.goal)
    u = (goal - start) / steps
    return Plan(
        agent_id=agent.id,
        controls=tuple(tuple(u) for _ in range(steps)),
        expected_trajectory=tuple(tuple(start + k * u) for k in range(steps + 1)),
        goal_step=steps,
        goal_indicators=tuple(1 if k == steps else 0 for k in range(steps + 1)),
        margins={},
        selected_faces={},
        safety_term=0.0,
        time_term=float(steps),
        objective=lam * steps,
        risk_bound=0.0,
        lam=lam,
    )


def head_on_game(lam: float, horizon: int = 6) -> GameSpec:
    return GameSpec(
        agents=(
            AgentSpec.square(0, (0, 0), (40, 0), half_extent=2.0),
            AgentSpec.square(1, (40, 0), (0, 0), half_extent=2.0),
        ),
        params=PlanParams(horizon=horizon, lam=lam),
    )


def _overlaps(game: GameSpec, profile: Profile) -> list:
    a0, a1 = game.agents
    p0, p1 = profile.plan_for(0), profile.plan_for(1)
    volume = box((0, 0), (4, 4))
    hits = []
    for t in range(min(p0.goal_step, p1.goal_step)):
        rel = np.asarray(p0.position(t)) - np.asarray(p1.position(t))
        if volume.contains(rel, tol=-1e-6):
            hits.append(t)
    return hits


class GameTestCase(unittest.TestCase):
    def setUp(self):
        Settings._reset_instance()
        self.options = SolveOptions(time_limit=60.0)

    def tearDown(self):
        Settings._reset_instance()


class TestGameSpec(unittest.TestCase):
    def test_needs_an_agent(self):
        with self.assertRaises(ValueError):
            GameSpec(agents=(), params=PlanParams())

    def test_duplicate_ids(self):
        a = AgentSpec.square(0, (0, 0), (10, 0))
        b = AgentSpec.square(0, (0, 20), (10, 20))
        with self.assertRaises(ValueError):
            GameSpec(agents=(a, b), params=PlanParams())

    def test_duplicate_starts(self):
        a = AgentSpec.square(0, (0, 0), (10, 0))
        b = AgentSpec.square(1, (0, 0), (10, 20))
        with self.assertRaises(ValueError):
            GameSpec(agents=(a, b), params=PlanParams())

    def test_agent_lookup(self):
        game = head_on_game(1.0)
        self.assertEqual(game.ids, [0, 1])
        self.assertEqual(game.agent(1).start, (40.0, 0.0))
        with self.assertRaises(KeyError):
            game.agent(7)


class TestProfile(unittest.TestCase):
    def setUp(self):
        self.game = head_on_game(1.0)
        self.plans = tuple(straight_plan(a, 4, 1.0) for a in self.game.agents)

    def test_plan_lookup(self):
        profile = Profile(self.plans, self.game.params)
        self.assertIs(profile.plan_for(1), self.plans[1])
        with self.assertRaises(KeyError):
            profile.plan_for(3)
        self.assertEqual(len(profile), 2)
        self.assertEqual(profile.total_objective, 8.0)

    def test_duplicate_plans_rejected(self):
        with self.assertRaises(ValueError):
            Profile((self.plans[0], self.plans[0]), self.game.params)

    def test_replace_plan(self):
        profile = Profile(self.plans, self.game.params)
        slower = straight_plan(self.game.agent(0), 5, 1.0)
        updated = profile.replace_plan(slower)
        self.assertIs(updated.plan_for(0), slower)
        self.assertIs(updated.plan_for(1), self.plans[1])
        self.assertIs(profile.plan_for(0), self.plans[0])

    def test_others(self):
        profile = Profile(self.plans, self.game.params)
        others = profile.others(self.game, 0)
        self.assertEqual([(a.id, p.agent_id) for a, p in others], [(1, 1)])

    def test_head_on_profile_collides(self):
        profile = Profile(self.plans, self.game.params)
        objectives = profile_objectives(self.game, profile)
        self.assertEqual(objectives, {0: math.inf, 1: math.inf})


class TestBestResponseDynamics(GameTestCase):
    def test_converges_on_head_on_crossing(self):
        game = head_on_game(1.0)
        result = best_response_dynamics(game, max_rounds=10, options=self.options, backend="scipy")
        self.assertTrue(result.converged)
        self.assertLessEqual(result.rounds, 10)
        self.assertEqual(len(result.history), result.rounds)
        self.assertLessEqual(result.epsilon, 1e-6)
        self.assertEqual(_overlaps(game, result.profile), [])
        for agent in game.agents:
            j = evaluate_plan(
                result.profile.plan_for(agent.id), agent, result.profile.others(game, agent.id), game.params
            )
            self.assertTrue(math.isfinite(j))
            self.assertEqual(result.profile.plan_for(agent.id).goal_step, 4)

    def test_result_is_an_equilibrium(self):
        game = head_on_game(1.0)
        result = best_response_dynamics(game, max_rounds=10, options=self.options, backend="scipy")
        ok, slacks = verify_equilibrium(game, result.profile, 1e-3, self.options, "scipy")
        self.assertTrue(ok)
        self.assertEqual(sorted(slacks), [0, 1])
        for report in slacks.values():
            self.assertLessEqual(report.value, 1e-3)
            self.assertFalse(report.lower_bound)

    def test_shuffled_order_is_reproducible(self):
        game = head_on_game(1.0)
        r1 = best_response_dynamics(game, max_rounds=10, order_seed=3, options=self.options, backend="scipy")
        r2 = best_response_dynamics(game, max_rounds=10, order_seed=3, options=self.options, backend="scipy")
        self.assertEqual(r1.rounds, r2.rounds)
        for a in game.ids:
            self.assertEqual(r1.profile.plan_for(a).controls, r2.profile.plan_for(a).controls)

    def test_round_limit_validated(self):
        with self.assertRaises(ValueError):
            best_response_dynamics(head_on_game(1.0), max_rounds=0)

    def test_initial_profile_ignores_other_agents(self):
        game = head_on_game(1.0)
        profile = initial_profile(game, self.options, "scipy")
        self.assertEqual([p.goal_step for p in profile.plans], [4, 4])
        for plan in profile.plans:
            self.assertEqual(plan.margins, {})

    def test_colliding_profile_is_not_an_equilibrium(self):
        game = head_on_game(1.0)
        profile = Profile(tuple(straight_plan(a, 4, 1.0) for a in game.agents), game.params)
        ok, slacks = verify_equilibrium(game, profile, 1e-3, self.options, "scipy", workers=2)
        self.assertFalse(ok)
        self.assertEqual(slacks[0].value, math.inf)


class TestSocialOptimum(GameTestCase):
    def test_encoding_layout(self):
        game = head_on_game(0.5, horizon=6)
        model, blocks = encode_mp3(game)
        self.assertEqual([b.agent.id for b in blocks], [0, 1])
        for block in blocks:
            self.assertFalse(block.whole_model)
            self.assertEqual(len(block.groups), 7)
        names = {v.name for v in model.variables}
        self.assertIn("a0_d_0", names)
        self.assertIn("a1_s_agent0_3", names)

    def test_social_plans_are_separated(self):
        game = head_on_game(0.5)
        profile = social_optimum(game, self.options, "scipy")
        self.assertEqual(profile.status, "optimal")
        self.assertEqual(_overlaps(game, profile), [])
        for agent in game.agents:
            plan = profile.plan_for(agent.id)
            np.testing.assert_allclose(plan.expected_trajectory[-1], agent.goal, atol=1e-5)
            self.assertAlmostEqual(plan.objective, plan.recompute_objective(), places=9)

    def test_not_worse_than_equilibrium(self):
        game = head_on_game(1.0)
        eq = best_response_dynamics(game, max_rounds=10, options=self.options, backend="scipy")
        opt = social_optimum(game, self.options, "scipy")
        self.assertLessEqual(opt.total_objective, eq.profile.total_objective + 1e-6)
        report = compare_outcomes(eq, opt)
        self.assertAlmostEqual(report.mean_T_eq, 4.0)
        self.assertAlmostEqual(report.mean_T_opt, 4.0)
        self.assertAlmostEqual(report.delta_T, 0.0)

    def test_margins_stop_at_opponent_goal(self):
        game = head_on_game(0.5)
        profile = social_optimum(game, self.options, "scipy")
        for agent in game.agents:
            other = 1 - agent.id
            steps = sorted(t for label, t in profile.plan_for(agent.id).margins if label == f"agent{other}")
            self.assertEqual(steps, list(range(profile.plan_for(other).goal_step + 1)))

    def test_same_plans_compare_equal(self):
        game = head_on_game(0.5)
        opt = social_optimum(game, self.options, "scipy")
        eq = EquilibriumResult(refresh_profile(game, opt), rounds=1, converged=True)
        report = compare_outcomes(eq, opt)
        self.assertAlmostEqual(report.delta_G, 0.0, places=9)
        self.assertAlmostEqual(report.delta_J, 0.0, places=9)
        self.assertAlmostEqual(report.delta_T, 0.0, places=9)
        for agent in game.agents:
            plan = opt.plan_for(agent.id)
            j = evaluate_plan(plan, agent, opt.others(game, agent.id), game.params)
            self.assertAlmostEqual(j, plan.objective, places=9)

    def test_static_obstacles_included(self):
        game = GameSpec(
            agents=(
                AgentSpec.square(0, (0, 0), (30, 0), half_extent=1.0),
                AgentSpec.square(1, (0, 40), (30, 40), half_extent=1.0),
            ),
            params=PlanParams(horizon=4, lam=0.5),
            obstacles=(box((15, 0), (2, 2)),),
        )
        _, blocks = encode_mp3(game)
        labels = {g.label for g in blocks[0].groups}
        self.assertEqual(labels, {"obstacle0", "agent1"})


@unittest.skipUnless(os.environ.get("PPG_ACCEPTANCE") == "1", "set PPG_ACCEPTANCE=1 for full-size games")
class TestBuiltinEquilibria(GameTestCase):
    def test_builtins_converge_to_verified_equilibria(self):
        for name in builtin_names():
            game = builtin_scenario(name).to_game(lam=0.5, horizon=12)
            result = best_response_dynamics(game, max_rounds=20, options=self.options, backend="scipy")
            if not result.converged:
                self.assertEqual(result.rounds, 20, name)
                continue
            ok, _ = verify_equilibrium(game, result.profile, 1e-3, self.options, "scipy")
            self.assertTrue(ok, name)


class TestCompareOutcomes(unittest.TestCase):
    def setUp(self):
        self.game = head_on_game(1.0)

    def _result(self, steps, lam=1.0):
        params = self.game.params.replace(lam=lam)
        plans = tuple(straight_plan(a, steps, lam) for a in self.game.agents)
        return Profile(plans, params)

    def test_deltas(self):
        eq = EquilibriumResult(self._result(5), rounds=2, converged=True)
        report = compare_outcomes(eq, self._result(4))
        self.assertEqual(report.delta_T, 1.0)
        self.assertEqual(report.delta_J, 1.0)
        self.assertEqual(report.delta_G, 0.0)
        self.assertEqual(set(report.as_dict()), {
            "mean_J_eq", "mean_J_opt", "mean_T_eq", "mean_T_opt", "mean_G_eq", "mean_G_opt",
        })

    def test_parameter_mismatch(self):
        eq = EquilibriumResult(self._result(4, lam=1.0), rounds=1, converged=True)
        with self.assertRaises(ValueError):
            compare_outcomes(eq, self._result(4, lam=0.5))

    def test_agent_mismatch(self):
        eq = EquilibriumResult(self._result(4), rounds=1, converged=True)
        single = Profile((straight_plan(self.game.agent(0), 4, 1.0),), self.game.params)
        with self.assertRaises(ValueError):
            compare_outcomes(eq, single)

    def test_report_is_plain_data(self):
        report = OutcomeReport(1.0, 0.5, 4.0, 4.0, -2.0, -3.0)
        self.assertAlmostEqual(report.delta_J, 0.5)
        self.assertAlmostEqual(report.delta_G, 1.0)


if __name__ == "__main__":
    unittest.main()
