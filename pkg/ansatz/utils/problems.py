"""
Graph instances and their QUBO encodings.

All three problems are stored in minimization form ("lower is better"), so a
Maximum Cut instance holds the negated cut size. Bitstrings follow the
simulator convention: the binary rendering of the basis index, so qubit /
variable ``k`` is bit ``k`` counted from the right.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np

from ansatz.utils.exceptions import InfeasibleGraphError

logger = logging.getLogger(__name__)

PROBLEMS = ("maxcut", "min_vertex_cover", "max_clique")
CONSTRAINED_PROBLEMS = ("min_vertex_cover", "max_clique")
SEED_SEARCH_LIMIT = 10_000
BRUTE_FORCE_LIMIT = 24
_CHUNK = 1 << 18


@dataclass(frozen=True)
class GraphSpec:
    """Topology parameters; ``p`` for erdos_renyi, ``m`` for barabasi_albert, ``side`` for grid2d"""

    topology: str
    n: int
    p: float | None = None
    m: int | None = None
    side: int = 4
    seed: int | None = None


# The eight topologies of the benchmark grid, keyed by a size-independent name
TOPOLOGIES = {
    "3-regular": {"topology": "three_regular"},
    "erdos-renyi-0.2": {"topology": "erdos_renyi", "p": 0.2},
    "erdos-renyi-0.7": {"topology": "erdos_renyi", "p": 0.7},
    "barabasi-albert-0.2": {"topology": "barabasi_albert", "m_fraction": 0.2},
    "barabasi-albert-0.5": {"topology": "barabasi_albert", "m_fraction": 0.5},
    "2d-grid-4": {"topology": "grid2d", "side": 4},
    "star": {"topology": "star"},
    "cycle": {"topology": "cycle"},
}


def barabasi_albert_m(n: int, fraction: float) -> int:
    return max(1, int(round(fraction * n)))


def graph_spec(topology_key: str, n: int) -> GraphSpec:
    if topology_key not in TOPOLOGIES:
        raise ValueError(f"Unknown topology {topology_key!r}, expected one of {list(TOPOLOGIES)}")
    options = dict(TOPOLOGIES[topology_key])
    fraction = options.pop("m_fraction", None)
    if fraction is not None:
        options["m"] = barabasi_albert_m(n, fraction)
    return GraphSpec(n=n, **options)


def topology_label(topology_key: str, n: int) -> str:
    """Row label used in reports, e.g. ``barabasi-albert - 2`` at n=8"""
    spec = graph_spec(topology_key, n)
    if spec.topology == "barabasi_albert":
        return f"barabasi-albert - {spec.m}"
    if spec.topology == "erdos_renyi":
        return f"erdos-renyi - {spec.p}"
    if spec.topology == "grid2d":
        return f"2d-grid - {spec.side}"
    return topology_key


def _sample(spec: GraphSpec, seed: int) -> nx.Graph:
    match spec.topology:
        case "three_regular":
            return nx.random_regular_graph(3, spec.n, seed=seed)
        case "erdos_renyi":
            return nx.gnp_random_graph(spec.n, spec.p, seed=seed)
        case "barabasi_albert":
            return nx.barabasi_albert_graph(spec.n, spec.m, seed=seed)


def _check_feasible(spec: GraphSpec) -> None:
    if spec.n < 2:
        raise InfeasibleGraphError(f"Graphs need at least 2 vertices, got n={spec.n}")
    if spec.topology == "three_regular" and (spec.n % 2 or spec.n < 4):
        raise InfeasibleGraphError(f"3-regular graphs need an even n >= 4, got n={spec.n}")
    if spec.topology == "grid2d" and spec.n % spec.side:
        raise InfeasibleGraphError(f"Grid side {spec.side} does not divide n={spec.n}")
    if spec.topology == "erdos_renyi" and not (spec.p is not None and 0 < spec.p <= 1):
        raise InfeasibleGraphError(f"Erdos-Renyi needs p in (0, 1], got p={spec.p}")
    if spec.topology == "barabasi_albert" and not (spec.m is not None and 1 <= spec.m < spec.n):
        raise InfeasibleGraphError(f"Barabasi-Albert needs 1 <= m < n, got m={spec.m}")
    if spec.topology not in {"three_regular", "erdos_renyi", "barabasi_albert", "grid2d", "star", "cycle"}:
        raise InfeasibleGraphError(f"Unknown topology {spec.topology!r}")


def resolve_graph(spec: GraphSpec) -> tuple[nx.Graph, int | None]:
    """Build the graph; random topologies use the smallest connected seed.

    Returns the graph and the seed used (``None`` for deterministic topologies).
    """
    _check_feasible(spec)
    if spec.topology == "grid2d":
        grid = nx.grid_2d_graph(spec.side, spec.n // spec.side)
        return nx.convert_node_labels_to_integers(grid, ordering="sorted"), None
    if spec.topology == "star":
        return nx.star_graph(spec.n - 1), None
    if spec.topology == "cycle":
        return nx.cycle_graph(spec.n), None

    seeds = [spec.seed] if spec.seed is not None else range(SEED_SEARCH_LIMIT)
    for seed in seeds:
        graph = _sample(spec, seed)
        if nx.is_connected(graph):
            return graph, seed
    raise InfeasibleGraphError(
        f"No connected {spec.topology} graph with n={spec.n} within {len(seeds)} seeds"
    )


def generate_graph(spec: GraphSpec) -> list:
    graph, seed = resolve_graph(spec)
    logger.debug("Generated %s n=%d seed=%s with %d edges",
                 spec.topology, spec.n, seed, graph.number_of_edges())
    return normalized_edges(graph)


def normalized_edges(graph: nx.Graph) -> list:
    return sorted((min(u, v), max(u, v)) for u, v in graph.edges())


def as_graph(n: int, edges) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(edges)
    return graph


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """Minimize ``x^T q x + offset`` with ``q`` upper triangular (diagonal = linear terms)"""

    n: int
    q: np.ndarray
    problem_tag: str
    penalty: float = 0.0
    offset: float = 0.0
    name: str = ""

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.shape != (self.n, self.n):
            raise ValueError(f"Q must be {self.n}x{self.n}, got {q.shape}")
        if np.any(np.tril(q, -1)):
            raise ValueError("Q must be upper triangular")
        object.__setattr__(self, "q", q)

    @cached_property
    def energies(self) -> np.ndarray:
        """Energy of every basis index, in index order"""
        return all_energies(self)

    @cached_property
    def interacting_pairs(self) -> list:
        rows, cols = np.nonzero(np.triu(self.q, 1))
        return sorted(zip(rows.tolist(), cols.tolist()))


def _bits(indices: np.ndarray, n: int) -> np.ndarray:
    return ((indices[:, None] >> np.arange(n)) & 1).astype(float)


def all_energies(qubo: QuboInstance) -> np.ndarray:
    if qubo.n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"Exhaustive enumeration is limited to n <= {BRUTE_FORCE_LIMIT}")
    size = 1 << qubo.n
    energies = np.empty(size)
    for start in range(0, size, _CHUNK):
        x = _bits(np.arange(start, min(start + _CHUNK, size)), qubo.n)
        energies[start:start + len(x)] = np.einsum("bi,ij,bj->b", x, qubo.q, x) + qubo.offset
    return energies


def _assignment(bits, n: int) -> np.ndarray:
    if isinstance(bits, str):
        if len(bits) != n:
            raise ValueError(f"Bitstring of length {len(bits)} for {n} variables")
        return _bits(np.array([int(bits, 2)]), n)[0]
    if isinstance(bits, (int, np.integer)):
        if not 0 <= bits < (1 << n):
            raise ValueError(f"Index {bits} out of range for {n} variables")
        return _bits(np.array([int(bits)]), n)[0]
    x = np.asarray(bits, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"Assignment of length {x.shape} for {n} variables")
    return x


def energy(qubo: QuboInstance, bits) -> float:
    """Energy of a bitstring, a basis index or a 0/1 vector ``x`` (``x[k]`` = variable k)"""
    x = _assignment(bits, qubo.n)
    return float(x @ qubo.q @ x + qubo.offset)


def maxcut_qubo(graph: nx.Graph, name: str = "") -> QuboInstance:
    n = graph.number_of_nodes()
    q = np.zeros((n, n))
    for u, v in normalized_edges(graph):
        q[u, u] -= 1
        q[v, v] -= 1
        q[u, v] += 2
    return QuboInstance(n, q, "maxcut", name=name)


def _check_penalty(penalty: float) -> None:
    if not penalty > 0:
        raise ValueError(f"Penalty must be positive, got {penalty}")


def mvc_qubo(graph: nx.Graph, penalty: float, name: str = "") -> QuboInstance:
    _check_penalty(penalty)
    n = graph.number_of_nodes()
    q = np.eye(n)
    edges = normalized_edges(graph)
    for u, v in edges:
        q[u, u] -= penalty
        q[v, v] -= penalty
        q[u, v] += penalty
    return QuboInstance(n, q, "min_vertex_cover", penalty=penalty,
                        offset=penalty * len(edges), name=name)


def maxclique_qubo(graph: nx.Graph, penalty: float, name: str = "") -> QuboInstance:
    _check_penalty(penalty)
    n = graph.number_of_nodes()
    q = -np.eye(n)
    for u, v in itertools.combinations(range(n), 2):
        if not graph.has_edge(u, v):
            q[u, v] = penalty
    return QuboInstance(n, q, "max_clique", penalty=penalty, name=name)


def default_penalty(graph: nx.Graph, problem_tag: str) -> float:
    if problem_tag not in CONSTRAINED_PROBLEMS:
        raise ValueError(f"{problem_tag!r} has no constraints to penalize")
    return float(graph.number_of_nodes() + 1)


def build_qubo(graph: nx.Graph, problem_tag: str, name: str = "") -> QuboInstance:
    match problem_tag:
        case "maxcut":
            return maxcut_qubo(graph, name=name)
        case "min_vertex_cover":
            return mvc_qubo(graph, default_penalty(graph, problem_tag), name=name)
        case "max_clique":
            return maxclique_qubo(graph, default_penalty(graph, problem_tag), name=name)
        case _:
            raise ValueError(f"Unknown problem {problem_tag!r}, expected one of {PROBLEMS}")


def is_feasible(graph: nx.Graph, problem_tag: str, bits) -> bool:
    x = _assignment(bits, graph.number_of_nodes())
    if problem_tag == "min_vertex_cover":
        return all(x[u] or x[v] for u, v in graph.edges())
    if problem_tag == "max_clique":
        chosen = np.flatnonzero(x)
        return all(graph.has_edge(u, v) for u, v in itertools.combinations(chosen, 2))
    return True


@dataclass
class IsingHamiltonian:
    """``H(z) = c + sum_i h_i z_i + sum_{i<j} J_ij z_i z_j`` with ``z = 1 - 2x``"""

    h: np.ndarray
    J: dict
    c: float

    def energy(self, spins) -> float:
        z = np.asarray(spins, dtype=float)
        coupling = sum(value * z[i] * z[j] for (i, j), value in self.J.items())
        return float(self.c + self.h @ z + coupling)


def qubo_to_ising(qubo: QuboInstance) -> IsingHamiltonian:
    linear = np.diag(qubo.q).copy()
    upper = np.triu(qubo.q, 1)
    symmetric = upper + upper.T
    h = -linear / 2 - symmetric.sum(axis=1) / 4
    J = {(int(i), int(j)): float(upper[i, j] / 4) for i, j in zip(*np.nonzero(upper))}
    c = float(linear.sum() / 2 + upper.sum() / 4 + qubo.offset)
    return IsingHamiltonian(h=h, J=J, c=c)


def spins(bits, n: int) -> np.ndarray:
    return 1 - 2 * _assignment(bits, n)


def brute_force_extrema(qubo: QuboInstance) -> tuple:
    """Exact (min energy, argmin bitstring, max energy); ties go to the smallest index"""
    if qubo.n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"Exhaustive enumeration is limited to n <= {BRUTE_FORCE_LIMIT}")
    energies = qubo.energies
    argmin = int(np.argmin(energies))
    return float(energies[argmin]), format(argmin, f"0{qubo.n}b"), float(energies.max())


# Text formats


def dumps_graph(n: int, edges) -> str:
    edges = list(edges)
    lines = [f"{n} {len(edges)}"] + [f"{u} {v}" for u, v in edges]
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> tuple:
    lines = text.split("\n")
    n, m = (int(t) for t in lines[0].split())
    edges = [tuple(int(t) for t in line.split()) for line in lines[1:1 + m]]
    return n, edges


def dumps_qubo(qubo: QuboInstance) -> str:
    lines = [
        f"# problem={qubo.problem_tag} n={qubo.n} penalty={qubo.penalty!r} "
        f"offset={qubo.offset!r} name={qubo.name}"
    ]
    for i, j in zip(*np.nonzero(qubo.q)):
        lines.append(f"{i} {j} {float(qubo.q[i, j])!r}")
    return "\n".join(lines) + "\n"


def loads_qubo(text: str) -> QuboInstance:
    lines = [line for line in text.split("\n") if line.strip()]
    header = dict(token.split("=", 1) for token in lines[0].lstrip("#").split())
    n = int(header["n"])
    q = np.zeros((n, n))
    for line in lines[1:]:
        i, j, value = line.split()
        q[int(i), int(j)] = float(value)
    return QuboInstance(n, q, header["problem"], penalty=float(header["penalty"]),
                        offset=float(header["offset"]), name=header.get("name", ""))
