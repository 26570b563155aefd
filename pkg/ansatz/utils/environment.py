"""
Circuit-construction environments.

An episode starts from a Hadamard layer. Every step appends the gate(s) of
one action with angle 0, tunes the new angles against the estimated energy,
and rewards ``-<H>* - beta * depth``. In ``global`` mode an action is one gate
on concrete qubits; in ``block`` mode it is one gate of a 2-qubit block that is
repeated on every interacting pair of the QUBO.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ansatz.utils.exceptions import EmptyHistoryError
from ansatz.utils.optimizers import (
    FINETUNE_EVALS,
    INNER_EVALS,
    OptimizerBudget,
    minimize,
)
from ansatz.utils.problems import QuboInstance
from ansatz.utils.simulator import (
    AXES,
    Circuit,
    circuit_depth,
    exact_probabilities,
    hadamard_layer,
    sample_counts,
)

logger = logging.getLogger(__name__)

MODES = ("global", "block")
DEFAULT_BETA = 0.1
DEFAULT_N_RUNS = 1000
PATIENCE = 3
BLOCK_EPISODE_STEPS = 5


@dataclass(frozen=True)
class Action:
    """Rotation around ``axes`` on ``qubits``; block actions address block roles 0 and 1"""

    axes: str
    qubits: tuple

    @property
    def label(self) -> str:
        return f"R{self.axes}({','.join(f'q{q}' for q in self.qubits)})"


@dataclass(frozen=True)
class ActionSpace:
    mode: str
    n_qubits: int
    interacting_pairs: tuple
    actions: tuple

    def __len__(self) -> int:
        return len(self.actions)


def enumerate_actions(mode: str, n: int, interacting_pairs=()) -> ActionSpace:
    """Single-qubit rotations by axis then qubit, followed by two-qubit rotations by axis pair then pair"""
    interacting_pairs = tuple(tuple(pair) for pair in interacting_pairs)
    if mode == "global":
        if n < 2:
            raise ValueError(f"Global mode needs at least 2 qubits, got n={n}")
        qubits, pairs = range(n), list(itertools.combinations(range(n), 2))
    elif mode == "block":
        if not interacting_pairs:
            raise ValueError("Block mode needs at least one interacting pair")
        qubits, pairs = range(2), [(0, 1)]
    else:
        raise ValueError(f"Unknown mode {mode!r}, expected one of {MODES}")

    singles = [Action(axis, (q,)) for axis in AXES for q in qubits]
    doubles = [Action(a + b, pair) for a in AXES for b in AXES for pair in pairs]
    return ActionSpace(mode, n, interacting_pairs, tuple(singles + doubles))


def max_episode_steps(mode: str, n: int, instance: QuboInstance | None = None) -> int:
    if mode == "global":
        return 2 * n
    if mode == "block":
        return BLOCK_EPISODE_STEPS
    raise ValueError(f"Unknown mode {mode!r}, expected one of {MODES}")


def _append_action(circuit: Circuit, action: Action, qubits) -> None:
    if len(action.axes) == 1:
        circuit.add_gate("r" + action.axes, qubits)
    else:
        circuit.add_gate("rab", qubits, axes=action.axes)


def _append_block_gate(circuit: Circuit, action: Action, interacting_pairs) -> None:
    for pair in sorted(interacting_pairs):
        _append_action(circuit, action, tuple(pair[role] for role in action.qubits))


def instantiate_block(block_gates, interacting_pairs, n: int) -> Circuit:
    """Concrete gates for every block gate on every pair, block-gate-major, pairs in lexicographic order"""
    if not interacting_pairs:
        raise ValueError("Cannot instantiate a block without interacting pairs")
    circuit = Circuit(n)
    for action in block_gates:
        _append_block_gate(circuit, action, interacting_pairs)
    return circuit


def estimate_expectation(circuit: Circuit, instance: QuboInstance, n_runs: int,
                         rng: np.random.Generator) -> float:
    """Mean energy over ``n_runs`` measured bitstrings"""
    counts = sample_counts(exact_probabilities(circuit), n_runs, rng)
    return float(counts @ instance.energies / n_runs)


def exact_expectation(circuit: Circuit, instance: QuboInstance) -> float:
    return float(exact_probabilities(circuit) @ instance.energies)


@dataclass(frozen=True)
class RewardConfig:
    beta: float = DEFAULT_BETA
    n_runs: int = DEFAULT_N_RUNS

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if self.n_runs < 1:
            raise ValueError(f"n_runs must be at least 1, got {self.n_runs}")

    def reward(self, expectation: float, depth: int) -> float:
        return -expectation - self.beta * depth


@dataclass(frozen=True)
class EnvConfig:
    """Environment settings; ``beta`` and ``max_ep_len`` default per mode when left as None"""

    mode: str = "global"
    beta: float | None = None
    n_runs: int = DEFAULT_N_RUNS
    patience: int = PATIENCE
    max_ep_len: int | None = None
    inner_evals: int = INNER_EVALS
    finetune_evals: int = FINETUNE_EVALS
    initial_step: float = 0.5
    optimizer: str = "nelder-mead"
    full_refit: bool = False
    exact: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"Unknown mode {self.mode!r}, expected one of {MODES}")
        if self.patience < 1:
            raise ValueError(f"patience must be at least 1, got {self.patience}")

    def reward_config(self, instance: QuboInstance) -> RewardConfig:
        beta = self.beta
        if beta is None:
            beta = DEFAULT_BETA
            if self.mode == "block":
                beta /= max(1, len(instance.interacting_pairs))
        return RewardConfig(beta=beta, n_runs=self.n_runs)

    def episode_cap(self, instance: QuboInstance) -> int:
        return self.max_ep_len or max_episode_steps(self.mode, instance.n, instance)

    def budget(self, max_evals: int) -> OptimizerBudget:
        return OptimizerBudget(max_evals, self.initial_step, method=self.optimizer)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Observation:
    probs: np.ndarray


@dataclass
class EnvState:
    circuit: Circuit
    best_episode_reward: float = -math.inf
    patience: int = PATIENCE
    step_count: int = 0
    block_gates: list = field(default_factory=list)
    done: bool = False


@dataclass
class StepRecord:
    episode: int
    step: int
    action: int
    action_label: str
    reward: float
    expectation: float
    depth: int
    patience: int
    done: bool
    circuit: Circuit

    def as_trace(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "circuit"}


def update_patience(patience: int, reward: float, best_reward: float, patience_init: int) -> tuple:
    """Lower patience on a reward below the episode best, raise it otherwise; clamp to [0, init]"""
    patience = patience - 1 if reward < best_reward else patience + 1
    return min(max(patience, 0), patience_init), max(best_reward, reward)


class CircuitEnvironment:
    """One environment over one instance; owns its RNG and its step history"""

    def __init__(self, instance: QuboInstance, config: EnvConfig, rng: np.random.Generator):
        self.instance = instance
        self.config = config
        self.rng = rng
        self.pairs = instance.interacting_pairs
        self.action_space = enumerate_actions(config.mode, instance.n, self.pairs)
        self.reward_config = config.reward_config(instance)
        self.max_ep_len = config.episode_cap(instance)
        self.inner_budget = config.budget(config.inner_evals)
        self.state = None
        self.episode = -1
        self.history = []

    @property
    def observation_size(self) -> int:
        return 1 << self.instance.n

    def expectation(self, circuit: Circuit) -> float:
        if self.config.exact:
            return exact_expectation(circuit, self.instance)
        return estimate_expectation(circuit, self.instance, self.reward_config.n_runs, self.rng)

    def observe(self, circuit: Circuit) -> tuple:
        """Observation and the energy estimate read from the same measurement record"""
        probs = exact_probabilities(circuit)
        if self.config.exact:
            return Observation(probs), float(probs @ self.instance.energies)
        n_runs = self.reward_config.n_runs
        counts = sample_counts(probs, n_runs, self.rng)
        return Observation(counts / n_runs), float(counts @ self.instance.energies / n_runs)

    def reset(self) -> tuple:
        self.episode += 1
        self.state = EnvState(hadamard_layer(self.instance.n), patience=self.config.patience)
        observation, _ = self.observe(self.state.circuit)
        return self.state, observation

    def step(self, action_index: int) -> tuple:
        state = self.state
        if state is None or state.done:
            raise RuntimeError("The episode is over; call reset() first")
        if not 0 <= action_index < len(self.action_space):
            raise IndexError(f"Action {action_index} outside [0, {len(self.action_space)})")

        action = self.action_space.actions[action_index]
        circuit = state.circuit.copy()
        first_new = circuit.n_params
        if self.config.mode == "block":
            state.block_gates.append(action)
            _append_block_gate(circuit, action, self.pairs)
        else:
            _append_action(circuit, action, action.qubits)

        free = np.arange(0 if self.config.full_refit else first_new, circuit.n_params)

        def objective(values):
            params = circuit.params.copy()
            params[free] = values
            return self.expectation(circuit.with_params(params))

        result = minimize(objective, circuit.params[free], self.inner_budget)
        circuit.params[free] = result.x

        observation, expectation = self.observe(circuit)
        depth = circuit_depth(circuit)
        reward = self.reward_config.reward(expectation, depth)

        state.patience, state.best_episode_reward = update_patience(
            state.patience, reward, state.best_episode_reward, self.config.patience
        )
        state.circuit = circuit
        state.step_count += 1
        state.done = state.patience == 0 or state.step_count >= self.max_ep_len

        record = StepRecord(self.episode, state.step_count, action_index, action.label, reward,
                            expectation, depth, state.patience, state.done, circuit.copy())
        self.history.append(record)
        logger.debug("episode=%d step=%d action=%s reward=%.4f depth=%d patience=%d",
                     self.episode, state.step_count, action.label, reward, depth, state.patience)
        return state, observation, reward, state.done


@dataclass
class FinalizedCircuit:
    circuit: Circuit
    params: np.ndarray
    expectation: float
    source: StepRecord


def finalize(history, instance: QuboInstance, config: EnvConfig,
             rng: np.random.Generator) -> FinalizedCircuit:
    """Fine-tune every angle of the highest-reward circuit seen; the earliest wins ties"""
    if not history:
        raise EmptyHistoryError("No circuit was built, nothing to fine-tune")
    best = max(history, key=lambda record: record.reward)
    circuit = best.circuit

    def objective(values):
        candidate = circuit.with_params(values)
        if config.exact:
            return exact_expectation(candidate, instance)
        return estimate_expectation(candidate, instance, config.n_runs, rng)

    result = minimize(objective, circuit.params, config.budget(config.finetune_evals))
    logger.info("Fine-tuned %d angles of episode %d step %d: %.4f after %d evaluations",
                circuit.n_params, best.episode, best.step, result.fun, result.nfev)
    return FinalizedCircuit(circuit.with_params(result.x), result.x, result.fun, best)
