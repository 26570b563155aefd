"""QAOA baseline and the evaluation metrics shared by every method."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ansatz.utils.environment import estimate_expectation, exact_expectation
from ansatz.utils.exceptions import DegenerateInstanceError
from ansatz.utils.optimizers import FINETUNE_EVALS, OptimizerBudget, minimize
from ansatz.utils.problems import QuboInstance, qubo_to_ising
from ansatz.utils.simulator import (
    Circuit,
    GateInstance,
    circuit_depth,
    circuit_depth_cx,
    gate_census,
    hadamard_layer,
)

logger = logging.getLogger(__name__)

CENSUS_BASIS = ("H", "Rx", "Ry", "Rz", "CX")
MAX_LAYERS = 10


@dataclass(frozen=True)
class QaoaConfig:
    p: int = 1
    max_evals: int = FINETUNE_EVALS
    n_runs: int = 1000
    initial_step: float = 0.5
    optimizer: str = "nelder-mead"
    exact: bool = False

    def __post_init__(self):
        if not 1 <= self.p <= MAX_LAYERS:
            raise ValueError(f"p must be in [1, {MAX_LAYERS}], got {self.p}")

    @property
    def budget(self) -> OptimizerBudget:
        return OptimizerBudget(self.max_evals, self.initial_step, method=self.optimizer)

    def as_dict(self) -> dict:
        return asdict(self)


def build_qaoa(instance: QuboInstance, p: int) -> Circuit:
    """Hadamard layer, then p x (cost layer sharing gamma_l, Rx mixer sharing beta_l).

    Parameters are laid out as ``[gamma_1, beta_1, ..., gamma_p, beta_p]``. The
    Ising constant only contributes a global phase and is left out.
    """
    if p < 1:
        raise ValueError(f"QAOA needs at least one layer, got p={p}")
    ising = qubo_to_ising(instance)
    circuit = hadamard_layer(instance.n)
    for _ in range(p):
        gamma = circuit.add_parameter()
        beta = circuit.add_parameter()
        for qubit, h in enumerate(ising.h):
            if h != 0:
                circuit.append(GateInstance("rz", (qubit,), param_slot=gamma, scale=2 * float(h)))
        for (i, j), coupling in sorted(ising.J.items()):
            if coupling != 0:
                circuit.append(GateInstance("rzz", (i, j), param_slot=gamma, scale=2 * coupling))
        for qubit in range(instance.n):
            circuit.append(GateInstance("rx", (qubit,), param_slot=beta, scale=2.0))
    return circuit


def optimize_qaoa(circuit: Circuit, instance: QuboInstance, config: QaoaConfig,
                  rng: np.random.Generator) -> tuple:
    """Minimize the energy estimate over all 2p angles starting from zeros"""

    def objective(values):
        candidate = circuit.with_params(values)
        if config.exact:
            return exact_expectation(candidate, instance)
        return estimate_expectation(candidate, instance, config.n_runs, rng)

    result = minimize(objective, np.zeros(circuit.n_params), config.budget)
    logger.debug("QAOA p=%d reached %.4f in %d evaluations",
                 circuit.n_params // 2, result.fun, result.nfev)
    return result.x, result.fun


def approximation_ratio(estimate: float, h_min: float, h_max: float, clamp: bool = False) -> float:
    """(estimate - h_max) / (h_min - h_max): 1 at the ground energy, 0 at the highest"""
    if h_min == h_max:
        raise DegenerateInstanceError(f"Degenerate instance: h_min == h_max == {h_min}")
    if h_min > h_max:
        raise ValueError(f"h_min ({h_min}) must be below h_max ({h_max})")
    ratio = (estimate - h_max) / (h_min - h_max)
    return min(max(ratio, 0.0), 1.0) if clamp else ratio


@dataclass
class MetricsReport:
    gate_count: int
    depth: int
    depth_cx: int
    census: dict = field(default_factory=dict)
    fractions: dict = field(default_factory=dict)
    approximation_ratio: float | None = None
    approximation_ratio_raw: float | None = None
    estimate: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def composition_report(circuit: Circuit) -> MetricsReport:
    counts = gate_census(circuit)
    census = {label: counts.get(label, 0) for label in CENSUS_BASIS}
    total = sum(census.values())
    fractions = {label: (count / total if total else 0.0) for label, count in census.items()}
    return MetricsReport(total, circuit_depth(circuit), circuit_depth_cx(circuit), census, fractions)


def evaluate_circuit(circuit: Circuit, instance: QuboInstance, h_min: float, h_max: float,
                     n_runs: int, rng: np.random.Generator, exact: bool = False) -> MetricsReport:
    """Composition plus a fresh energy estimate and its approximation ratio"""
    report = composition_report(circuit)
    if exact:
        report.estimate = exact_expectation(circuit, instance)
    else:
        report.estimate = estimate_expectation(circuit, instance, n_runs, rng)
    report.approximation_ratio_raw = approximation_ratio(report.estimate, h_min, h_max)
    report.approximation_ratio = approximation_ratio(report.estimate, h_min, h_max, clamp=True)
    return report
