"""
Derivative-free minimization of circuit parameters with a hard cap on
objective evaluations.

The objective may be noisy (shot estimates), so the result is always the best
point that was actually evaluated, never the solver's final iterate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as scipy_minimize

logger = logging.getLogger(__name__)

INNER_EVALS = 50
FINETUNE_EVALS = 1000
METHODS = ("nelder-mead", "cobyla")


@dataclass(frozen=True)
class OptimizerBudget:
    max_evals: int = INNER_EVALS
    initial_step: float = 0.5
    tolerance: float = 1e-6
    method: str = "nelder-mead"

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError(f"max_evals must be at least 1, got {self.max_evals}")
        if self.method not in METHODS:
            raise ValueError(f"Unknown method {self.method!r}, expected one of {METHODS}")


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    nfev: int


class _BudgetExhausted(Exception):
    pass


class _TrackedObjective:
    """Counts evaluations, keeps the best evaluated point and enforces the budget"""

    def __init__(self, objective, max_evals):
        self.objective = objective
        self.max_evals = max_evals
        self.nfev = 0
        self.best_x = None
        self.best_f = math.inf

    def __call__(self, x):
        if self.nfev >= self.max_evals:
            raise _BudgetExhausted
        self.nfev += 1
        value = float(self.objective(np.array(x, dtype=float)))
        if math.isnan(value):
            value = math.inf
        if value < self.best_f or self.best_x is None:
            self.best_f, self.best_x = value, np.array(x, dtype=float)
        # Solvers cannot work with infinities; any finite stand-in ranks last
        return value if math.isfinite(value) else 1e300


def minimize(objective, x0, budget: OptimizerBudget = OptimizerBudget()) -> OptimizeResult:
    """Minimize ``objective`` from ``x0`` within ``budget.max_evals`` calls"""
    x0 = np.array(x0, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")

    tracked = _TrackedObjective(objective, budget.max_evals)
    if len(x0) == 0 or budget.max_evals == 1:
        tracked(x0)
        return OptimizeResult(x0, tracked.best_f, tracked.nfev)

    # Both solvers spend their first evaluation on x0
    try:
        if budget.method == "nelder-mead":
            simplex = np.vstack([x0, x0 + budget.initial_step * np.eye(len(x0))])
            scipy_minimize(tracked, x0, method="Nelder-Mead", options={
                "initial_simplex": simplex,
                "maxfev": budget.max_evals,
                "xatol": budget.tolerance,
                "fatol": budget.tolerance,
            })
        else:
            scipy_minimize(tracked, x0, method="COBYLA", tol=budget.tolerance, options={
                "rhobeg": budget.initial_step,
                "maxiter": budget.max_evals,
            })
    except _BudgetExhausted:
        logger.debug("Optimizer stopped at the %d evaluation cap", budget.max_evals)

    return OptimizeResult(tracked.best_x, tracked.best_f, tracked.nfev)
