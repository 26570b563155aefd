"""
PPO actor-critic written directly on numpy arrays.

Policy and value networks are independent tanh MLPs that read the 2^n
observation vector; gradients are computed by explicit backpropagation and
applied with Adam. Advantages use GAE(lambda) and the policy maximizes the
clipped surrogate with KL-based early stopping.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ansatz.utils.exceptions import TrainingDivergedError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PpoConfig:
    total_steps: int = 3000
    steps_per_epoch: int = 300
    pi_lr: float = 3e-4
    vf_lr: float = 1e-3
    train_pi_iters: int = 80
    train_v_iters: int = 80
    gamma: float = 0.99
    gae_lambda: float = 0.97
    clip_epsilon: float = 0.2
    target_kl: float = 0.01
    hidden_sizes: tuple = (64, 64)

    def __post_init__(self):
        if not 1 <= self.steps_per_epoch <= self.total_steps:
            raise ValueError(
                f"Need total_steps >= steps_per_epoch >= 1, got "
                f"{self.total_steps} and {self.steps_per_epoch}"
            )
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0 <= self.gae_lambda <= 1:
            raise ValueError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))

    @classmethod
    def for_mode(cls, mode: str, **overrides) -> PpoConfig:
        """Global: 3000 steps; block: 250 steps in epochs of 25"""
        defaults = {"total_steps": 250, "steps_per_epoch": 25} if mode == "block" else {}
        return cls(**{**defaults, **overrides})

    @property
    def epochs(self) -> int:
        return math.ceil(self.total_steps / self.steps_per_epoch)

    def as_dict(self) -> dict:
        return asdict(self)


def _orthogonal(rows, cols, gain, rng):
    matrix = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(matrix)
    q *= np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


@dataclass
class MlpParams:
    weights: list
    biases: list

    @classmethod
    def initialize(cls, sizes, rng: np.random.Generator, output_gain: float) -> MlpParams:
        """Orthogonal weights with gain sqrt(2) on hidden layers, ``output_gain`` on the last"""
        weights, biases = [], []
        for index, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            gain = output_gain if index == len(sizes) - 2 else math.sqrt(2)
            weights.append(_orthogonal(fan_in, fan_out, gain, rng))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def sizes(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    @classmethod
    def from_flat(cls, sizes, vector) -> MlpParams:
        weights, biases, offset = [], [], 0
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(np.array(vector[offset:offset + fan_in * fan_out]).reshape(fan_in, fan_out))
            offset += fan_in * fan_out
            biases.append(np.array(vector[offset:offset + fan_out]))
            offset += fan_out
        if offset != len(vector):
            raise ValueError(f"Flat vector of length {len(vector)} does not match sizes {sizes}")
        return cls(weights, biases)

    def copy(self) -> MlpParams:
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def arrays(self) -> list:
        return [a for pair in zip(self.weights, self.biases) for a in pair]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


def _as_batch(params: MlpParams, observation) -> np.ndarray:
    x = np.asarray(observation, dtype=float)
    if x.shape[-1] != params.sizes[0]:
        raise ValueError(f"Observation width {x.shape[-1]} does not match input {params.sizes[0]}")
    return np.atleast_2d(x)


def mlp_forward(params: MlpParams, x: np.ndarray) -> tuple:
    """Output pre-activations and the per-layer inputs needed for backpropagation"""
    activations = [x]
    for index, (weight, bias) in enumerate(zip(params.weights, params.biases)):
        z = activations[-1] @ weight + bias
        if index == len(params.weights) - 1:
            return z, activations
        activations.append(np.tanh(z))


def mlp_backward(params: MlpParams, activations, grad_output: np.ndarray) -> list:
    """Gradients in ``MlpParams.arrays()`` order"""
    grad = grad_output
    grads = []
    for index in reversed(range(len(params.weights))):
        layer_input = activations[index]
        grads.append(grad.sum(axis=0))
        grads.append(layer_input.T @ grad)
        if index > 0:
            grad = (grad @ params.weights[index].T) * (1 - layer_input ** 2)
    return grads[::-1]


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def policy_log_probs(params: MlpParams, observation) -> np.ndarray:
    logits, _ = mlp_forward(params, _as_batch(params, observation))
    log_probs = log_softmax(logits)
    return log_probs[0] if np.ndim(observation) == 1 else log_probs


def policy_forward(params: MlpParams, observation) -> np.ndarray:
    """Action distribution; a single observation gives a 1-D vector"""
    return np.exp(policy_log_probs(params, observation))


def value_forward(params: MlpParams, observation):
    output, _ = mlp_forward(params, _as_batch(params, observation))
    values = output[:, 0]
    return float(values[0]) if np.ndim(observation) == 1 else values


def sample_action(probabilities, rng: np.random.Generator) -> int:
    probabilities = np.asarray(probabilities, dtype=float)
    if np.any(probabilities < 0) or abs(probabilities.sum() - 1) > 1e-6:
        raise ValueError(f"Not a probability distribution (sum={probabilities.sum()})")
    cumulative = np.cumsum(probabilities)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(index, len(probabilities) - 1)


@dataclass
class Trajectory:
    """Rollout buffer; ``last_value`` bootstraps a tail cut by the epoch boundary"""

    observations: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    last_value: float = 0.0

    def add(self, observation, action, reward, value, log_prob, done) -> None:
        if not math.isfinite(log_prob):
            raise ValueError(f"Non-finite log-probability {log_prob} for action {action}")
        self.observations.append(np.asarray(observation, dtype=float))
        self.actions.append(int(action))
        self.rewards.append(float(reward))
        self.values.append(float(value))
        self.log_probs.append(float(log_prob))
        self.dones.append(bool(done))

    def __len__(self) -> int:
        return len(self.rewards)


def compute_advantages(trajectory: Trajectory, gamma: float, gae_lambda: float,
                       normalize: bool = True) -> tuple:
    """GAE(lambda) advantages and return targets (raw advantages plus values)"""
    if not len(trajectory):
        raise ValueError("Cannot compute advantages of an empty trajectory")
    rewards = np.array(trajectory.rewards)
    values = np.array(trajectory.values)
    advantages = np.zeros(len(rewards))
    next_value, running = trajectory.last_value, 0.0
    for t in reversed(range(len(rewards))):
        if trajectory.dones[t]:
            next_value, running = 0.0, 0.0
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * gae_lambda * running
        advantages[t] = running
        next_value = values[t]
    returns = advantages + values
    if normalize and len(advantages) > 1:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
    return advantages, returns


def clipped_surrogate(ratio, advantages, clip_epsilon):
    return np.minimum(ratio * advantages,
                      np.clip(ratio, 1 - clip_epsilon, 1 + clip_epsilon) * advantages)


def policy_loss_and_grad(params: MlpParams, observations, actions, advantages, log_probs_old,
                         clip_epsilon: float) -> tuple:
    """Negated clipped surrogate, its gradient and the approximate KL to the old policy"""
    logits, activations = mlp_forward(params, observations)
    log_probs_all = log_softmax(logits)
    rows = np.arange(len(actions))
    log_probs = log_probs_all[rows, actions]
    ratio = np.exp(log_probs - log_probs_old)
    loss = -clipped_surrogate(ratio, advantages, clip_epsilon).mean()

    unclipped = np.where(advantages >= 0, ratio <= 1 + clip_epsilon, ratio >= 1 - clip_epsilon)
    grad_log_probs = -(unclipped * advantages * ratio) / len(actions)
    grad_logits = -np.exp(log_probs_all) * grad_log_probs[:, None]
    grad_logits[rows, actions] += grad_log_probs
    grads = mlp_backward(params, activations, grad_logits)
    approx_kl = float(np.mean(log_probs_old - log_probs))
    return float(loss), grads, approx_kl


def value_loss_and_grad(params: MlpParams, observations, returns) -> tuple:
    output, activations = mlp_forward(params, observations)
    error = output[:, 0] - returns
    loss = float(np.mean(error ** 2))
    grads = mlp_backward(params, activations, (2 * error / len(error))[:, None])
    return loss, grads


class Adam:
    def __init__(self, params: MlpParams, lr: float, betas=(0.9, 0.999), eps=1e-8):
        self.lr, self.betas, self.eps = lr, betas, eps
        self.m = [np.zeros_like(a) for a in params.arrays()]
        self.v = [np.zeros_like(a) for a in params.arrays()]
        self.t = 0

    def step(self, params: MlpParams, grads) -> None:
        if not all(np.all(np.isfinite(g)) for g in grads):
            raise TrainingDivergedError("Non-finite gradient in network update")
        self.t += 1
        beta1, beta2 = self.betas
        for array, grad, m, v in zip(params.arrays(), grads, self.m, self.v):
            m *= beta1
            m += (1 - beta1) * grad
            v *= beta2
            v += (1 - beta2) * grad ** 2
            m_hat = m / (1 - beta1 ** self.t)
            v_hat = v / (1 - beta2 ** self.t)
            array -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class ActorCritic:
    """Independent policy and value networks with their own Adam states"""

    def __init__(self, observation_size: int, n_actions: int, config: PpoConfig,
                 rng: np.random.Generator):
        self.config = config
        hidden = list(config.hidden_sizes)
        self.policy = MlpParams.initialize([observation_size, *hidden, n_actions], rng, 0.01)
        self.value = MlpParams.initialize([observation_size, *hidden, 1], rng, 1.0)
        self.reset_optimizers()

    def reset_optimizers(self) -> None:
        self.pi_optimizer = Adam(self.policy, self.config.pi_lr)
        self.vf_optimizer = Adam(self.value, self.config.vf_lr)

    def act(self, observation, rng: np.random.Generator) -> tuple:
        log_probs = policy_log_probs(self.policy, observation)
        action = sample_action(np.exp(log_probs), rng)
        return action, value_forward(self.value, observation), float(log_probs[action])

    def save(self, path) -> None:
        """Both networks as an .npz archive; ``load`` restores them exactly"""
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, policy_sizes=self.policy.sizes, policy=self.policy.flat(),
                 value_sizes=self.value.sizes, value=self.value.flat())

    def load(self, path) -> None:
        with np.load(path) as checkpoint:
            self.policy = MlpParams.from_flat(list(checkpoint["policy_sizes"]), checkpoint["policy"])
            self.value = MlpParams.from_flat(list(checkpoint["value_sizes"]), checkpoint["value"])
        self.reset_optimizers()


def ppo_update(agent: ActorCritic, trajectory: Trajectory, config: PpoConfig) -> dict:
    """One epoch of policy and value updates; mutates ``agent`` and returns diagnostics"""
    advantages, returns = compute_advantages(trajectory, config.gamma, config.gae_lambda)
    observations = np.array(trajectory.observations)
    actions = np.array(trajectory.actions)
    log_probs_old = np.array(trajectory.log_probs)

    loss_pi_start = kl = None
    pi_iters = 0
    for _ in range(config.train_pi_iters):
        loss_pi, grads, kl = policy_loss_and_grad(
            agent.policy, observations, actions, advantages, log_probs_old, config.clip_epsilon
        )
        if loss_pi_start is None:
            loss_pi_start = loss_pi
        if kl > 1.5 * config.target_kl:
            logger.debug("Early stop after %d policy steps, KL %.4f", pi_iters, kl)
            break
        agent.pi_optimizer.step(agent.policy, grads)
        pi_iters += 1

    loss_v_start = None
    for _ in range(config.train_v_iters):
        loss_v, grads = value_loss_and_grad(agent.value, observations, returns)
        if loss_v_start is None:
            loss_v_start = loss_v
        agent.vf_optimizer.step(agent.value, grads)

    if not (agent.policy.is_finite() and agent.value.is_finite()):
        raise TrainingDivergedError("Network parameters became non-finite")
    return {
        "loss_pi": loss_pi_start,
        "loss_v": loss_v_start,
        "kl": kl,
        "pi_iters": pi_iters,
    }


@dataclass
class TrainingHistory:
    steps: list
    diagnostics: list
    agent: ActorCritic | None = None


def train(env_factory, instance, ppo_config: PpoConfig, env_config,
          rng: np.random.Generator) -> TrainingHistory:
    """Run ``total_steps`` interactions, updating the networks after every epoch"""
    env_rng, policy_rng, init_rng = rng.spawn(3)
    env = env_factory(instance, env_config, env_rng)
    agent = ActorCritic(env.observation_size, len(env.action_space), ppo_config, init_rng)

    diagnostics = []
    best_reward = -math.inf
    _, observation = env.reset()
    remaining = ppo_config.total_steps
    for epoch in range(ppo_config.epochs):
        trajectory = Trajectory()
        episodes = 0
        for _ in range(min(ppo_config.steps_per_epoch, remaining)):
            action, value, log_prob = agent.act(observation.probs, policy_rng)
            _, next_observation, reward, done = env.step(action)
            trajectory.add(observation.probs, action, reward, value, log_prob, done)
            observation = next_observation
            if done:
                episodes += 1
                _, observation = env.reset()
        if not trajectory.dones[-1]:
            trajectory.last_value = value_forward(agent.value, observation.probs)
        remaining -= len(trajectory)

        rewards = np.array(trajectory.rewards)
        best_reward = max(best_reward, float(rewards.max()))
        record = {
            "epoch": epoch,
            "steps": len(trajectory),
            "episodes": episodes,
            "mean_reward": float(rewards.mean()),
            "max_reward": float(rewards.max()),
            "best_reward": best_reward,
        }
        saved = agent.policy.copy(), agent.value.copy()
        try:
            record.update(ppo_update(agent, trajectory, ppo_config))
        except TrainingDivergedError as error:
            logger.error("Epoch %d update aborted: %s", epoch, error)
            agent.policy, agent.value = saved
            agent.reset_optimizers()
            record["aborted"] = str(error)
        diagnostics.append(record)
        logger.info("epoch %d/%d mean reward %.4f best %.4f kl %s",
                    epoch + 1, ppo_config.epochs, record["mean_reward"], best_reward,
                    record.get("kl"))

    return TrainingHistory(env.history, diagnostics, agent)
