import networkx as nx
import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from ansatz.utils.exceptions import InfeasibleGraphError
from ansatz.utils.problems import (
    PROBLEMS,
    TOPOLOGIES,
    GraphSpec,
    QuboInstance,
    as_graph,
    brute_force_extrema,
    build_qubo,
    default_penalty,
    dumps_graph,
    dumps_qubo,
    energy,
    generate_graph,
    graph_spec,
    is_feasible,
    loads_graph,
    loads_qubo,
    qubo_to_ising,
    spins,
    topology_label,
)

SINGLE_EDGE = as_graph(2, [(0, 1)])


@st.composite
def qubos(draw, max_n=10):
    n = draw(st.integers(1, max_n))
    values = draw(st.lists(st.integers(-5, 5), min_size=n * n, max_size=n * n))
    q = np.triu(np.array(values, dtype=float).reshape(n, n))
    offset = draw(st.integers(-3, 3))
    return QuboInstance(n, q, "maxcut", offset=float(offset))


class GraphTests(SimpleTestCase):
    def test_grid_is_connected_at_every_size(self):
        for n in (8, 12, 16):
            for topology in TOPOLOGIES:
                with self.subTest(topology=topology, n=n):
                    edges = generate_graph(graph_spec(topology, n))
                    self.assertTrue(nx.is_connected(as_graph(n, edges)))

    def test_generation_is_deterministic(self):
        spec = graph_spec("erdos-renyi-0.2", 8)
        self.assertEqual(generate_graph(spec), generate_graph(spec))

    def test_deterministic_topologies(self):
        self.assertEqual(len(generate_graph(graph_spec("star", 8))), 7)
        self.assertEqual(len(generate_graph(graph_spec("cycle", 8))), 8)
        # 4 x 2 grid
        self.assertEqual(len(generate_graph(graph_spec("2d-grid-4", 8))), 10)

    def test_three_regular_degrees(self):
        graph = as_graph(8, generate_graph(graph_spec("3-regular", 8)))
        self.assertEqual({degree for _, degree in graph.degree()}, {3})

    def test_barabasi_albert_attachment_at_n8(self):
        self.assertEqual(graph_spec("barabasi-albert-0.2", 8).m, 2)
        self.assertEqual(graph_spec("barabasi-albert-0.5", 8).m, 4)
        self.assertEqual(topology_label("barabasi-albert-0.2", 8), "barabasi-albert - 2")

    def test_infeasible_combinations(self):
        with self.assertRaises(InfeasibleGraphError):
            generate_graph(GraphSpec("three_regular", 7))
        with self.assertRaises(InfeasibleGraphError):
            generate_graph(GraphSpec("grid2d", 10, side=4))
        with self.assertRaises(ValueError):
            graph_spec("lattice", 8)

    def test_graph_text_form(self):
        edges = generate_graph(graph_spec("cycle", 8))
        self.assertEqual(loads_graph(dumps_graph(8, edges)), (8, edges))


class QuboTests(SimpleTestCase):
    def test_maxcut_single_edge(self):
        qubo = build_qubo(SINGLE_EDGE, "maxcut")
        np.testing.assert_array_equal(qubo.energies, [0, -1, -1, 0])
        self.assertEqual(brute_force_extrema(qubo), (-1.0, "01", 0.0))

    def test_vertex_cover_single_edge(self):
        qubo = build_qubo(SINGLE_EDGE, "min_vertex_cover")
        self.assertEqual(qubo.penalty, 3)
        self.assertEqual(brute_force_extrema(qubo), (1.0, "01", 3.0))

    def test_clique_single_edge(self):
        qubo = build_qubo(SINGLE_EDGE, "max_clique")
        self.assertEqual(brute_force_extrema(qubo), (-2.0, "11", 0.0))

    def test_energy_accepts_every_assignment_form(self):
        qubo = build_qubo(as_graph(3, [(0, 1), (1, 2)]), "maxcut")
        # index 5 sets variables 0 and 2
        self.assertEqual(energy(qubo, "101"), energy(qubo, 5))
        self.assertEqual(energy(qubo, 5), energy(qubo, np.array([1, 0, 1])))
        self.assertEqual(energy(qubo, 5), -2.0)
        with self.assertRaises(ValueError):
            energy(qubo, "10")

    def test_interacting_pairs(self):
        qubo = build_qubo(as_graph(3, [(1, 2), (0, 1)]), "maxcut")
        self.assertEqual(qubo.interacting_pairs, [(0, 1), (1, 2)])

    def test_lower_triangle_is_rejected(self):
        with self.assertRaises(ValueError):
            QuboInstance(2, np.array([[0, 0], [1, 0]]), "maxcut")

    def test_maxcut_has_no_penalty(self):
        with self.assertRaises(ValueError):
            default_penalty(SINGLE_EDGE, "maxcut")

    @settings(max_examples=60, deadline=None)
    @given(qubos())
    def test_ising_energy_agrees_everywhere(self, qubo):
        ising = qubo_to_ising(qubo)
        for index in range(1 << qubo.n):
            self.assertAlmostEqual(ising.energy(spins(index, qubo.n)), qubo.energies[index],
                                   delta=1e-10)

    def test_qubo_text_form(self):
        qubo = build_qubo(as_graph(4, [(0, 1), (1, 2), (2, 3)]), "max_clique", name="path")
        restored = loads_qubo(dumps_qubo(qubo))
        np.testing.assert_array_equal(restored.q, qubo.q)
        self.assertEqual((restored.penalty, restored.offset, restored.name), (5.0, 0.0, "path"))


class PenaltyTests(SimpleTestCase):
    """With P = n + 1 every infeasible assignment costs more than every feasible one"""

    def test_penalty_dominance_on_the_n8_grid(self):
        for topology in TOPOLOGIES:
            graph = as_graph(8, generate_graph(graph_spec(topology, 8)))
            for problem in PROBLEMS[1:]:
                with self.subTest(topology=topology, problem=problem):
                    qubo = build_qubo(graph, problem)
                    feasible = np.array([is_feasible(graph, problem, i) for i in range(256)])
                    h_min, argmin, _ = brute_force_extrema(qubo)
                    self.assertTrue(is_feasible(graph, problem, argmin))
                    self.assertTrue(np.all(qubo.energies[~feasible] > h_min))
                    self.assertLess(qubo.energies[feasible].max(), qubo.energies[~feasible].min())

    def test_maxcut_maximum_is_the_empty_cut(self):
        for n in (8, 12):
            for topology in TOPOLOGIES:
                with self.subTest(n=n, topology=topology):
                    graph = as_graph(n, generate_graph(graph_spec(topology, n)))
                    self.assertEqual(brute_force_extrema(build_qubo(graph, "maxcut"))[2], 0.0)

    def test_optimum_is_the_combinatorial_answer(self):
        graph = as_graph(8, generate_graph(graph_spec("star", 8)))
        self.assertEqual(brute_force_extrema(build_qubo(graph, "min_vertex_cover"))[0], 1.0)
        self.assertEqual(brute_force_extrema(build_qubo(graph, "max_clique"))[0], -2.0)
