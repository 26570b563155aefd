import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from ansatz.utils.agent import (
    ActorCritic,
    Adam,
    MlpParams,
    PpoConfig,
    Trajectory,
    clipped_surrogate,
    compute_advantages,
    log_softmax,
    mlp_forward,
    policy_forward,
    policy_log_probs,
    policy_loss_and_grad,
    ppo_update,
    sample_action,
    train,
    value_forward,
    value_loss_and_grad,
)
from ansatz.utils.environment import CircuitEnvironment, EnvConfig
from ansatz.utils.exceptions import TrainingDivergedError
from ansatz.utils.problems import as_graph, build_qubo

PATH_INSTANCE = build_qubo(as_graph(3, [(0, 1), (1, 2)]), "maxcut")


def numerical_gradient(loss, params, eps=1e-6):
    sizes, flat = params.sizes, params.flat()
    grad = np.zeros_like(flat)
    for index in range(len(flat)):
        shifted = flat.copy()
        shifted[index] += eps
        upper = loss(MlpParams.from_flat(sizes, shifted))
        shifted[index] -= 2 * eps
        lower = loss(MlpParams.from_flat(sizes, shifted))
        grad[index] = (upper - lower) / (2 * eps)
    return grad


def relative_error(analytic, numeric):
    return np.linalg.norm(analytic - numeric) / (np.linalg.norm(analytic) + np.linalg.norm(numeric))


def flatten(grads):
    return np.concatenate([g.ravel() for g in grads])


class NetworkTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_zero_output_layer_is_uniform(self):
        params = MlpParams.initialize([4, 8, 8, 5], self.rng, output_gain=0.0)
        np.testing.assert_allclose(policy_forward(params, self.rng.random(4)), [0.2] * 5)
        self.assertEqual(value_forward(MlpParams.initialize([4, 8, 1], self.rng, 0.0),
                                       self.rng.random(4)), 0.0)

    def test_hidden_layers_are_orthogonal(self):
        params = MlpParams.initialize([16, 64, 64, 3], self.rng, output_gain=0.01)
        weight = params.weights[1]
        np.testing.assert_allclose(weight.T @ weight, 2 * np.eye(64), atol=1e-10)

    def test_flat_round_trip_keeps_outputs(self):
        params = MlpParams.initialize([3, 5, 2], self.rng, 1.0)
        restored = MlpParams.from_flat(params.sizes, params.flat())
        x = self.rng.random((4, 3))
        np.testing.assert_array_equal(mlp_forward(params, x)[0], mlp_forward(restored, x)[0])

    def test_batch_and_single_observation_agree(self):
        params = MlpParams.initialize([3, 5, 4], self.rng, 1.0)
        batch = self.rng.random((2, 3))
        np.testing.assert_allclose(policy_forward(params, batch)[1], policy_forward(params, batch[1]))

    def test_wrong_observation_width(self):
        params = MlpParams.initialize([3, 5, 4], self.rng, 1.0)
        with self.assertRaises(ValueError):
            policy_forward(params, np.ones(4))

    def test_log_softmax_is_stable(self):
        out = log_softmax(np.array([1000.0, 1000.0]))
        np.testing.assert_allclose(out, np.log([0.5, 0.5]))


class SamplingTests(SimpleTestCase):
    def test_one_hot(self):
        rng = np.random.default_rng(1)
        self.assertEqual({sample_action([0, 0, 1, 0], rng) for _ in range(100)}, {2})

    def test_uniform_frequencies(self):
        rng = np.random.default_rng(2)
        draws = [sample_action([0.25] * 4, rng) for _ in range(100_000)]
        frequencies = np.bincount(draws, minlength=4) / len(draws)
        np.testing.assert_allclose(frequencies, 0.25, atol=0.01)

    def test_not_a_distribution(self):
        with self.assertRaises(ValueError):
            sample_action([0.5, 0.6], np.random.default_rng(0))


class AdvantageTests(SimpleTestCase):
    def trajectory(self, rewards, values, dones):
        trajectory = Trajectory()
        for reward, value, done in zip(rewards, values, dones):
            trajectory.add(np.zeros(2), 0, reward, value, -0.5, done)
        return trajectory

    def test_one_terminal_step(self):
        advantages, returns = compute_advantages(self.trajectory([2.0], [0.5], [True]), 1.0, 0.97,
                                                 normalize=False)
        self.assertAlmostEqual(advantages[0], 1.5)
        self.assertAlmostEqual(returns[0], 2.0)

    def test_discounted_returns(self):
        _, returns = compute_advantages(self.trajectory([1, 1], [0, 0], [False, True]), 0.5, 1.0,
                                        normalize=False)
        np.testing.assert_allclose(returns, [1.5, 1.0])

    def test_episode_boundary_stops_bootstrapping(self):
        trajectory = self.trajectory([1, 1], [0, 0], [True, True])
        _, returns = compute_advantages(trajectory, 0.9, 1.0, normalize=False)
        np.testing.assert_allclose(returns, [1.0, 1.0])

    def test_cut_tail_uses_last_value(self):
        trajectory = self.trajectory([0.0], [0.0], [False])
        trajectory.last_value = 2.0
        _, returns = compute_advantages(trajectory, 0.5, 1.0, normalize=False)
        self.assertAlmostEqual(returns[0], 1.0)

    def test_normalized_advantages(self):
        advantages, _ = compute_advantages(self.trajectory([1, 3, 0], [0, 0, 0], [False] * 3),
                                           0.99, 0.97)
        self.assertAlmostEqual(advantages.mean(), 0.0)
        self.assertAlmostEqual(advantages.std(), 1.0, places=6)

    def test_empty_trajectory(self):
        with self.assertRaises(ValueError):
            compute_advantages(Trajectory(), 0.99, 0.97)

    def test_non_finite_log_probability(self):
        with self.assertRaises(ValueError):
            Trajectory().add(np.zeros(2), 0, 1.0, 0.0, -np.inf, False)


class LossTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(3)
        self.policy = MlpParams.initialize([4, 6, 6, 3], rng, 1.0)
        self.value = MlpParams.initialize([4, 6, 6, 1], rng, 1.0)
        self.observations = rng.random((6, 4))
        self.actions = rng.integers(0, 3, size=6)
        self.advantages = rng.normal(size=6)
        current = log_softmax(mlp_forward(self.policy, self.observations)[0])
        # Two samples sit deep in the clipped region, the rest near ratio 1
        shift = np.array([0.05, -0.05, 0.6, -0.6, 0.02, -0.03])
        self.log_probs_old = current[np.arange(6), self.actions] + shift
        self.returns = rng.normal(size=6)

    def test_clip_definition(self):
        self.assertAlmostEqual(float(clipped_surrogate(1.5, 2.0, 0.2)), 1.2 * 2.0)
        self.assertAlmostEqual(float(clipped_surrogate(0.5, -1.0, 0.2)), -0.8)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 5), st.floats(-5, 5), st.floats(0.05, 0.5))
    def test_clipped_objective_is_a_lower_bound(self, ratio, advantage, clip_epsilon):
        objective = float(clipped_surrogate(ratio, advantage, clip_epsilon))
        clipped = min(max(ratio, 1 - clip_epsilon), 1 + clip_epsilon)
        self.assertLessEqual(objective, ratio * advantage)
        self.assertLessEqual(objective, clipped * advantage)
        self.assertIn(objective, (ratio * advantage, clipped * advantage))

    def test_policy_gradient_matches_finite_differences(self):
        def loss(params):
            return policy_loss_and_grad(params, self.observations, self.actions, self.advantages,
                                        self.log_probs_old, 0.2)[0]

        _, grads, _ = policy_loss_and_grad(self.policy, self.observations, self.actions,
                                           self.advantages, self.log_probs_old, 0.2)
        self.assertLessEqual(relative_error(flatten(grads),
                                            numerical_gradient(loss, self.policy)), 1e-4)

    def test_value_gradient_matches_finite_differences(self):
        def loss(params):
            return value_loss_and_grad(params, self.observations, self.returns)[0]

        _, grads = value_loss_and_grad(self.value, self.observations, self.returns)
        self.assertLessEqual(relative_error(flatten(grads),
                                            numerical_gradient(loss, self.value)), 1e-4)

    def test_kl_is_zero_against_itself(self):
        current = log_softmax(mlp_forward(self.policy, self.observations)[0])
        _, _, kl = policy_loss_and_grad(self.policy, self.observations, self.actions,
                                        self.advantages, current[np.arange(6), self.actions], 0.2)
        self.assertAlmostEqual(kl, 0.0)

    def test_value_loss_never_rises(self):
        rng = np.random.default_rng(6)
        params = MlpParams.initialize([4, 8, 1], rng, 1.0)
        observations = rng.random((32, 4))
        returns = observations.sum(axis=1)
        optimizer = Adam(params, 1e-3)
        losses = []
        for _ in range(80):
            loss, grads = value_loss_and_grad(params, observations, returns)
            losses.append(loss)
            optimizer.step(params, grads)
        self.assertTrue(all(b <= a for a, b in zip(losses, losses[1:])))

    def test_adam_rejects_non_finite_gradients(self):
        optimizer = Adam(self.value, 1e-3)
        grads = [np.full_like(a, np.nan) for a in self.value.arrays()]
        with self.assertRaises(TrainingDivergedError):
            optimizer.step(self.value, grads)


class PpoTests(SimpleTestCase):
    def test_block_defaults(self):
        config = PpoConfig.for_mode("block")
        self.assertEqual((config.total_steps, config.steps_per_epoch, config.epochs), (250, 25, 10))
        self.assertEqual(PpoConfig.for_mode("global").total_steps, 3000)

    def test_invalid_config(self):
        with self.assertRaises(ValueError):
            PpoConfig(total_steps=10, steps_per_epoch=20)
        with self.assertRaises(ValueError):
            PpoConfig(gamma=0)

    def test_update_reports_diagnostics(self):
        rng = np.random.default_rng(4)
        config = PpoConfig(total_steps=20, steps_per_epoch=10, hidden_sizes=(8, 8))
        agent = ActorCritic(4, 3, config, rng)
        trajectory = Trajectory()
        for step in range(10):
            observation = rng.random(4)
            action, value, log_prob = agent.act(observation, rng)
            trajectory.add(observation, action, float(action == 1), value, log_prob, step % 5 == 4)
        diagnostics = ppo_update(agent, trajectory, config)
        self.assertEqual(set(diagnostics), {"loss_pi", "loss_v", "kl", "pi_iters"})
        self.assertLessEqual(diagnostics["pi_iters"], config.train_pi_iters)

    def make_agent(self, seed, hidden_sizes=(8,)):
        config = PpoConfig(total_steps=20, steps_per_epoch=10, hidden_sizes=hidden_sizes)
        return ActorCritic(4, 3, config, np.random.default_rng(seed))

    def test_large_kl_stops_before_any_policy_step(self):
        agent = self.make_agent(5)
        config = PpoConfig(total_steps=20, steps_per_epoch=10, hidden_sizes=(8,), target_kl=1e-4)
        rng = np.random.default_rng(5)
        trajectory = Trajectory()
        for step in range(10):
            observation = rng.random(4)
            action, value, log_prob = agent.act(observation, rng)
            trajectory.add(observation, action, 1.0, value, log_prob + 0.5, step == 9)
        before = agent.policy.flat()
        diagnostics = ppo_update(agent, trajectory, config)
        self.assertEqual(diagnostics["pi_iters"], 0)
        self.assertAlmostEqual(diagnostics["kl"], 0.5)
        np.testing.assert_array_equal(agent.policy.flat(), before)

    def test_act_reports_the_log_softmax_probability(self):
        agent = self.make_agent(6)
        rng = np.random.default_rng(6)
        for _ in range(20):
            observation = rng.random(4)
            action, _, log_prob = agent.act(observation, rng)
            self.assertEqual(log_prob, float(policy_log_probs(agent.policy, observation)[action]))

    def test_checkpoint_round_trip(self):
        agent = self.make_agent(7, hidden_sizes=(8, 6))
        restored = self.make_agent(8, hidden_sizes=(8, 6))
        grads = [np.ones_like(a) for a in restored.policy.arrays()]
        restored.pi_optimizer.step(restored.policy, grads)

        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        path = Path(directory.name) / "nested" / "agent.npz"
        agent.save(path)
        restored.load(path)

        np.testing.assert_array_equal(restored.policy.flat(), agent.policy.flat())
        np.testing.assert_array_equal(restored.value.flat(), agent.value.flat())
        observation = np.random.default_rng(9).random(4)
        np.testing.assert_array_equal(policy_forward(restored.policy, observation),
                                      policy_forward(agent.policy, observation))
        self.assertEqual(restored.pi_optimizer.t, 0)
        self.assertTrue(all(not m.any() for m in restored.pi_optimizer.m))

    def test_training_runs_every_step_and_is_reproducible(self):
        config = PpoConfig(total_steps=24, steps_per_epoch=10, train_pi_iters=5, train_v_iters=5,
                           hidden_sizes=(8,))
        env_config = EnvConfig(inner_evals=10, n_runs=200)

        def run(seed):
            return train(CircuitEnvironment, PATH_INSTANCE, config, env_config,
                         np.random.default_rng(seed))

        first, second = run(9), run(9)
        self.assertEqual(len(first.steps), 24)
        self.assertEqual([d["steps"] for d in first.diagnostics], [10, 10, 4])
        self.assertEqual([r.as_trace() for r in first.steps], [r.as_trace() for r in second.steps])
        np.testing.assert_array_equal(first.agent.policy.flat(), second.agent.policy.flat())
