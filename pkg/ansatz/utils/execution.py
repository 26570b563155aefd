"""
A single benchmark run, from a QUBO instance to a finished record.

Nothing here touches the database, so runs can execute in worker processes;
experiments.py owns persistence.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

from ansatz.utils.agent import train
from ansatz.utils.baseline import build_qaoa, evaluate_circuit, optimize_qaoa
from ansatz.utils.environment import CircuitEnvironment, finalize
from ansatz.utils.helpers import run_rng
from ansatz.utils.simulator import draw_circuit, dumps_circuit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunTask:
    """Everything a worker needs for one (instance, method, seed) run"""

    method: str
    instance: object
    meta: dict
    h_min: float
    h_max: float
    configs: dict
    seed: int
    checkpoint: str | None = None  # .npz the trained agent is saved to


def execute_run(task: RunTask) -> dict:
    """Train or optimize, fine-tune, and evaluate; returns the run payload"""
    start = time.perf_counter()
    instance = task.instance
    rng = run_rng(task.seed, instance.name, task.method)

    if task.method == "qaoa":
        qaoa = task.configs["qaoa"]
        circuit = build_qaoa(instance, qaoa.p)
        params, estimate = optimize_qaoa(circuit, instance, qaoa, rng)
        circuit = circuit.with_params(params)
        traces, diagnostics = [], []
        best_reward = -estimate
        n_runs, exact = qaoa.n_runs, qaoa.exact
        checkpoint = None
    else:
        ppo, env = task.configs["ppo"], task.configs["env"]
        history = train(CircuitEnvironment, instance, ppo, env, rng)
        final = finalize(history.steps, instance, env, rng)
        checkpoint = None
        if task.checkpoint:
            history.agent.save(task.checkpoint)
            checkpoint = Path(task.checkpoint).name
        circuit = final.circuit
        traces = [record.as_trace() for record in history.steps]
        diagnostics = history.diagnostics
        best_reward = final.source.reward
        n_runs, exact = env.n_runs, env.exact

    report = evaluate_circuit(circuit, instance, task.h_min, task.h_max, n_runs, rng, exact)
    wall_time = time.perf_counter() - start
    logger.info("%s %s seed=%d A.R. %.4f (raw %.4f) gates=%d depth=%d in %.1fs",
                instance.name, task.method, task.seed, report.approximation_ratio,
                report.approximation_ratio_raw, report.gate_count, report.depth, wall_time)
    return {
        "instance": instance.name,
        **task.meta,
        "method": task.method,
        "seed": task.seed,
        "config": {name: config.as_dict() for name, config in task.configs.items()},
        "h_min": task.h_min,
        "h_max": task.h_max,
        "traces": traces,
        "diagnostics": diagnostics,
        "circuit": dumps_circuit(circuit),
        "drawing": draw_circuit(circuit),
        "best_reward": best_reward,
        "checkpoint": checkpoint,
        "estimate": report.estimate,
        "approximation_ratio": report.approximation_ratio,
        "approximation_ratio_raw": report.approximation_ratio_raw,
        "composition": {
            "gate_count": report.gate_count,
            "depth": report.depth,
            "depth_cx": report.depth_cx,
            "census": report.census,
            "fractions": report.fractions,
        },
        "wall_time": wall_time,
    }
