import sys
import os
import csv
import math
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.settings import Settings
from game import GameSpec, Profile
from geometry import box
from milp import SolveOptions
from montecarlo import RolloutConfig, halfwidth, rollout, validate_bound, write_trajectories_csv
from planner import AgentSpec, Plan, PlanParams, plan_single


def straight_plan(agent: AgentSpec, steps: int, lam: float = 0.5) -> Plan:
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


def _game(agents, obstacles=(), horizon=6):
    return GameSpec(agents=tuple(agents), params=PlanParams(horizon=horizon), obstacles=tuple(obstacles))


def _profile(game, steps=4):
    return Profile(tuple(straight_plan(a, steps) for a in game.agents), game.params)


class TestRolloutConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = RolloutConfig()
        self.assertEqual((cfg.trials, cfg.seed, cfg.goal_radius), (1000, 0, 1.0))

    def test_validation(self):
        with self.assertRaises(ValueError):
            RolloutConfig(trials=0)
        with self.assertRaises(ValueError):
            RolloutConfig(seed=-1)
        with self.assertRaises(ValueError):
            RolloutConfig(goal_radius=0.0)

    def test_halfwidth(self):
        self.assertAlmostEqual(halfwidth(0.5, 100), 0.098)
        self.assertEqual(halfwidth(0.0, 100), 0.0)


class TestDeterministicRollout(unittest.TestCase):
    def test_zero_noise_parallel_agents(self):
        game = _game([
            AgentSpec.square(0, (0, 0), (40, 0), half_extent=2.0, sigma_scale=0.0),
            AgentSpec.square(1, (0, 30), (40, 30), half_extent=2.0, sigma_scale=0.0),
        ])
        report = rollout(game, _profile(game), RolloutConfig(trials=50))
        self.assertEqual(report.collision_rate, 0.0)
        self.assertEqual(report.goal_reach_rate, 1.0)
        self.assertEqual(report.mean_goal_step, 4.0)
        self.assertEqual(report.collisions_by_pair, {"0-1": 0})
        self.assertAlmostEqual(report.max_control, 10.0)
        self.assertTrue(validate_bound(report, _profile(game)))

    def test_zero_noise_head_on(self):
        game = _game([
            AgentSpec.square(0, (0, 0), (40, 0), half_extent=2.0, sigma_scale=0.0),
            AgentSpec.square(1, (40, 0), (0, 0), half_extent=2.0, sigma_scale=0.0),
        ])
        report = rollout(game, _profile(game), RolloutConfig(trials=20))
        self.assertEqual(report.collision_rate, 1.0)
        self.assertEqual(report.collisions_by_pair["0-1"], 20)
        self.assertEqual(report.agent_collision_rates, {0: 1.0, 1: 1.0})

    def test_obstacle_on_path(self):
        game = _game(
            [AgentSpec.square(0, (0, 0), (40, 0), half_extent=2.0, sigma_scale=0.0)],
            obstacles=[box((20, 0), (3, 3))],
        )
        report = rollout(game, _profile(game), RolloutConfig(trials=10))
        self.assertEqual(report.collisions_by_pair, {"0-obstacle0": 10})
        self.assertEqual(report.collision_rate, 1.0)

    def test_touching_is_not_a_collision(self):
        # reference points exactly 4 apart: bodies share an edge
        game = _game([
            AgentSpec.square(0, (0, 0), (40, 0), half_extent=2.0, sigma_scale=0.0),
            AgentSpec.square(1, (0, 4), (40, 4), half_extent=2.0, sigma_scale=0.0),
        ])
        report = rollout(game, _profile(game), RolloutConfig(trials=5))
        self.assertEqual(report.collision_rate, 0.0)

    def test_records_and_writes_trajectories(self):
        game = _game([
            AgentSpec.square(0, (0, 0), (40, 0), half_extent=2.0),
            AgentSpec.square(1, (0, 30), (40, 30), half_extent=2.0),
        ])
        report = rollout(game, _profile(game), RolloutConfig(trials=3, record_trajectories=True))
        self.assertEqual(report.trajectories.shape, (3, 2, 7, 2))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "traj.csv")
            rows = write_trajectories_csv(report, path)
            with open(path, newline="", encoding="utf-8") as fh:
                lines = list(csv.reader(fh))
        self.assertEqual(rows, 3 * 2 * 7)
        self.assertEqual(lines[0], ["trial", "agent", "t", "x", "y"])
        self.assertEqual(lines[1][:3], ["0", "0", "0"])
        self.assertEqual(len(lines), rows + 1)

    def test_write_without_recording(self):
        game = _game([AgentSpec.square(0, (0, 0), (40, 0))])
        report = rollout(game, _profile(game), RolloutConfig(trials=2))
        with self.assertRaises(ValueError):
            write_trajectories_csv(report, os.path.join(tempfile.gettempdir(), "unused.csv"))

    def test_as_dict_keys(self):
        game = _game([AgentSpec.square(0, (0, 0), (40, 0))])
        data = rollout(game, _profile(game), RolloutConfig(trials=2)).as_dict()
        self.assertEqual(data["trials"], 2)
        self.assertIn("collision_rate", data)
        self.assertIn("0", data["agent_collision_rates"])


class TestNoisyRollout(unittest.TestCase):
    def setUp(self):
        Settings._reset_instance()
        self.game = _game([
            AgentSpec.square(0, (0, 0), (40, 0), half_extent=2.0),
            AgentSpec.square(1, (0, 30), (40, 30), half_extent=2.0),
        ])

    def tearDown(self):
        Settings._reset_instance()

    def test_same_seed_same_paths(self):
        cfg = RolloutConfig(trials=25, seed=9, record_trajectories=True)
        a = rollout(self.game, _profile(self.game), cfg)
        b = rollout(self.game, _profile(self.game), cfg)
        np.testing.assert_array_equal(a.trajectories, b.trajectories)

    def test_trials_are_keyed_independently(self):
        short = rollout(self.game, _profile(self.game), RolloutConfig(trials=10, seed=4, record_trajectories=True))
        long = rollout(self.game, _profile(self.game), RolloutConfig(trials=30, seed=4, record_trajectories=True))
        np.testing.assert_array_equal(short.trajectories, long.trajectories[:10])

    def test_different_seed_differs(self):
        a = rollout(self.game, _profile(self.game), RolloutConfig(trials=5, seed=1, record_trajectories=True))
        b = rollout(self.game, _profile(self.game), RolloutConfig(trials=5, seed=2, record_trajectories=True))
        self.assertFalse(np.array_equal(a.trajectories, b.trajectories))

    def test_feedback_shrinks_spread(self):
        def final_spread(gain):
            agent = AgentSpec.square(0, (0, 0), (40, 0), feedback_gain=gain)
            game = _game([agent])
            report = rollout(game, _profile(game), RolloutConfig(trials=400, seed=0, record_trajectories=True))
            return float(np.std(report.trajectories[:, 0, 4, 1]))

        self.assertLess(final_spread(0.5), final_spread(0.0))

    def test_open_loop_variance_matches_schedule(self):
        agent = AgentSpec.square(0, (0, 0), (40, 0), sigma_scale=1.9)
        game = _game([agent])
        report = rollout(game, _profile(game), RolloutConfig(trials=4000, seed=0, record_trajectories=True))
        var = float(np.var(report.trajectories[:, 0, 3, 1]))
        # 1.9 * 3 with a loose sampling allowance
        self.assertAlmostEqual(var, 5.7, delta=0.6)

    def test_planned_path_respects_bound(self):
        agent = AgentSpec.square(0, (0, 0), (30, 0), half_extent=1.0)
        obstacle = box((15, 0), (2, 2))
        game = GameSpec(agents=(agent,), params=PlanParams(horizon=4, lam=0.5), obstacles=(obstacle,))
        plan = plan_single(agent, [obstacle], game.params, SolveOptions(time_limit=60.0), "scipy")
        profile = Profile((plan,), game.params)
        report = rollout(game, profile, RolloutConfig(trials=10000, seed=0))
        self.assertTrue(validate_bound(report, profile))
        self.assertTrue(math.isfinite(report.mean_goal_step))


if __name__ == "__main__":
    unittest.main()
