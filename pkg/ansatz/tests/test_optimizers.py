import math

import numpy as np
from django.test import SimpleTestCase

from ansatz.utils.optimizers import OptimizerBudget, minimize


class CountingObjective:
    def __init__(self, function):
        self.function = function
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.function(x)


class MinimizeTests(SimpleTestCase):
    def test_one_dimensional_quadratic(self):
        result = minimize(lambda x: (x[0] - 2) ** 2, [0.0], OptimizerBudget(50))
        self.assertLessEqual(abs(result.x[0] - 2), 1e-2)

    def test_two_dimensional_quadratic(self):
        result = minimize(lambda x: (x[0] - 1) ** 2 + 2 * (x[1] + 1) ** 2, [0.0, 0.0],
                          OptimizerBudget(100))
        self.assertLessEqual(result.fun, 1e-3)

    def test_convex_quadratics_up_to_eight_dimensions(self):
        for dim in (1, 2, 4, 8):
            with self.subTest(dim=dim):
                weights, center = np.linspace(1, 2, dim), np.linspace(-1, 1, dim)
                objective = CountingObjective(lambda x: float(weights @ (x - center) ** 2))
                result = minimize(objective, np.zeros(dim), OptimizerBudget(60 * dim))
                self.assertLessEqual(result.fun, 1e-3)
                self.assertLessEqual(objective.calls, 60 * dim)

    def test_start_point_is_evaluated_once(self):
        points = []

        def objective(x):
            points.append(x.copy())
            return float(np.sum((x - 3) ** 2))

        minimize(objective, [0.0, 0.0], OptimizerBudget(30))
        np.testing.assert_array_equal(points[0], [0.0, 0.0])
        self.assertEqual(sum(np.array_equal(p, [0.0, 0.0]) for p in points), 1)

    def test_budget_is_a_hard_cap(self):
        for method in ("nelder-mead", "cobyla"):
            with self.subTest(method=method):
                objective = CountingObjective(lambda x: float(np.sum(np.cos(3 * x) + x ** 2)))
                result = minimize(objective, np.ones(4), OptimizerBudget(20, method=method))
                self.assertLessEqual(objective.calls, 20)
                self.assertEqual(result.nfev, objective.calls)

    def test_constant_objective_keeps_start_value(self):
        result = minimize(lambda x: 3.0, [0.5, -0.5], OptimizerBudget(30))
        self.assertEqual(result.fun, 3.0)

    def test_noisy_objective_spends_the_whole_budget(self):
        rng = np.random.default_rng(5)

        def noisy(x):
            return float(np.sum(x ** 2) + rng.normal(scale=0.5))

        result = minimize(noisy, [1.0, 1.0], OptimizerBudget(40))
        self.assertTrue(math.isfinite(result.fun))
        self.assertEqual(result.nfev, 40)

    def test_empty_vector_evaluates_once(self):
        objective = CountingObjective(lambda x: 1.5)
        result = minimize(objective, [], OptimizerBudget(50))
        self.assertEqual((result.fun, result.nfev, objective.calls), (1.5, 1, 1))

    def test_nan_ranks_last(self):
        result = minimize(lambda x: math.nan if x[0] > 0.1 else (x[0] + 1) ** 2, [0.0],
                          OptimizerBudget(60))
        self.assertLess(result.fun, 1.0)

    def test_invalid_budgets(self):
        with self.assertRaises(ValueError):
            OptimizerBudget(0)
        with self.assertRaises(ValueError):
            OptimizerBudget(10, method="bfgs")
        with self.assertRaises(ValueError):
            minimize(lambda x: 0.0, [math.inf])
