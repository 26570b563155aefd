"""
Statevector simulation of parameterized circuits, shot sampling and
structural circuit metrics.

Amplitude layout is little-endian: basis index ``i`` holds qubit ``k`` in bit
``k``. Bitstrings are the binary rendering of the index, most significant
qubit first, so on two qubits index 1 (qubit 0 set) reads ``"01"``.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

AXES = ("x", "y", "z")
SINGLE_QUBIT_KINDS = frozenset({"h", "rx", "ry", "rz"})
TWO_QUBIT_KINDS = frozenset({"rzz", "rab", "cx"})
PARAMETERIZED_KINDS = frozenset({"rx", "ry", "rz", "rzz", "rab"})

_LABELS = {"h": "H", "rx": "Rx", "ry": "Ry", "rz": "Rz", "rzz": "Rzz", "cx": "CX"}
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class GateInstance:
    """One gate of a circuit.

    Parameterized kinds read their angle as ``scale * params[param_slot]``.
    Basis changes produced by rewriting (``Rx(+-pi/2)`` of the y-axis change)
    carry a fixed ``angle`` instead of a slot.
    """

    kind: str
    qubits: tuple
    param_slot: int | None = None
    axes: str | None = None
    scale: float = 1.0
    angle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind not in SINGLE_QUBIT_KINDS | TWO_QUBIT_KINDS:
            raise ValueError(f"Unknown gate kind {self.kind!r}")

        width = 1 if self.kind in SINGLE_QUBIT_KINDS else 2
        if len(self.qubits) != width:
            raise ValueError(f"{self.kind} acts on {width} qubit(s), got {self.qubits}")
        if min(self.qubits) < 0:
            raise ValueError(f"Negative qubit index in {self.qubits}")
        if width == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"Duplicate qubit index in {self.qubits}")

        if self.kind == "rab":
            if self.axes is None or len(self.axes) != 2 or any(a not in AXES for a in self.axes):
                raise ValueError(f"Rab gate needs two axes from {AXES}, got {self.axes!r}")
        elif self.axes is not None:
            raise ValueError(f"Only Rab gates carry axes, got {self.axes!r} on {self.kind}")

        if self.kind in PARAMETERIZED_KINDS:
            if (self.param_slot is None) == (self.angle is None):
                raise ValueError(f"{self.kind} needs exactly one of param_slot or angle")
        elif self.param_slot is not None or self.angle is not None:
            raise ValueError(f"{self.kind} takes no parameter")

    @property
    def label(self) -> str:
        if self.kind == "rab":
            return "R" + self.axes
        return _LABELS[self.kind]

    def theta(self, params) -> float:
        """Rotation angle of this gate under the parameter vector ``params``"""
        if self.angle is not None:
            return self.angle
        if self.param_slot is None:
            return 0.0
        return self.scale * float(params[self.param_slot])


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"{self.n_qubits} qubits need {1 << self.n_qubits} amplitudes, "
                f"got shape {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, n_qubits: int) -> StateVector:
        amplitudes = np.zeros(1 << n_qubits, dtype=complex)
        amplitudes[0] = 1.0
        return cls(n_qubits, amplitudes)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class Circuit:
    """Ordered gate list over ``n_qubits`` with a shared parameter vector (radians)"""

    n_qubits: int
    gates: list = field(default_factory=list)
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"A circuit needs at least one qubit, got {self.n_qubits}")
        self.params = np.array(self.params, dtype=float).reshape(-1)
        gates, self.gates = list(self.gates), []
        for gate in gates:
            self.append(gate)

    @property
    def n_params(self) -> int:
        return len(self.params)

    def __len__(self) -> int:
        return len(self.gates)

    def add_parameter(self, value: float = 0.0) -> int:
        self.params = np.append(self.params, float(value))
        return len(self.params) - 1

    def append(self, gate: GateInstance) -> None:
        if max(gate.qubits) >= self.n_qubits:
            raise ValueError(f"Qubit index out of range in {gate.qubits} (n={self.n_qubits})")
        if gate.param_slot is not None and gate.param_slot >= len(self.params):
            raise ValueError(f"Parameter slot {gate.param_slot} is not allocated")
        self.gates.append(gate)

    def add_gate(self, kind: str, qubits, axes: str | None = None, value: float = 0.0,
                 scale: float = 1.0) -> GateInstance:
        """Append a gate, allocating a fresh parameter slot for parameterized kinds"""
        slot = self.add_parameter(value) if kind in PARAMETERIZED_KINDS else None
        gate = GateInstance(kind, tuple(qubits), param_slot=slot, axes=axes, scale=scale)
        self.append(gate)
        return gate

    def copy(self) -> Circuit:
        return Circuit(self.n_qubits, list(self.gates), self.params.copy())

    def with_params(self, params) -> Circuit:
        params = np.asarray(params, dtype=float)
        if params.shape != self.params.shape:
            raise ValueError(f"Expected {self.n_params} parameters, got {params.shape}")
        return Circuit(self.n_qubits, list(self.gates), params.copy())


def hadamard_layer(n_qubits: int) -> Circuit:
    circuit = Circuit(n_qubits)
    for qubit in range(n_qubits):
        circuit.add_gate("h", (qubit,))
    return circuit


def bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


# Gate kernels: strided in-place updates over reshaped views of the amplitudes


def _rx(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _qubit_view(amplitudes, n, qubit):
    return amplitudes.reshape(1 << (n - qubit - 1), 2, 1 << qubit)


def _pair_view(amplitudes, n, q_a, q_b):
    low, high = sorted((q_a, q_b))
    return amplitudes.reshape(1 << (n - high - 1), 2, 1 << (high - low - 1), 2, 1 << low)


def _apply_single(amplitudes, n, qubit, matrix):
    view = _qubit_view(amplitudes, n, qubit)
    zero, one = view[:, 0, :].copy(), view[:, 1, :].copy()
    view[:, 0, :] = matrix[0, 0] * zero + matrix[0, 1] * one
    view[:, 1, :] = matrix[1, 0] * zero + matrix[1, 1] * one


def _apply_rz(amplitudes, n, qubit, theta):
    view = _qubit_view(amplitudes, n, qubit)
    view[:, 0, :] *= np.exp(-0.5j * theta)
    view[:, 1, :] *= np.exp(0.5j * theta)


def _apply_rzz(amplitudes, n, q_a, q_b, theta):
    view = _pair_view(amplitudes, n, q_a, q_b)
    same, differ = np.exp(-0.5j * theta), np.exp(0.5j * theta)
    view[:, 0, :, 0, :] *= same
    view[:, 1, :, 1, :] *= same
    view[:, 0, :, 1, :] *= differ
    view[:, 1, :, 0, :] *= differ


def _apply_cx(amplitudes, n, control, target):
    view = _pair_view(amplitudes, n, control, target)
    if control > target:
        first, second = view[:, 1, :, 0, :], view[:, 1, :, 1, :]
    else:
        first, second = view[:, 0, :, 1, :], view[:, 1, :, 1, :]
    held = first.copy()
    first[...] = second
    second[...] = held


def decompose_rab(a: str, b: str, param_slot: int | None = None, qubits=(0, 1),
                  scale: float = 1.0, angle: float | None = None) -> list:
    """Rewrite exp(-i theta/2 sigma_a (x) sigma_b) as basis changes around an Rzz.

    Returns ``[U_a, U_b, Rzz, U_a^dagger, U_b^dagger]`` with ``U_x = H``,
    ``U_y = Rx(pi/2)`` and ``U_z`` omitted. ``U_a`` acts on ``qubits[0]``.
    """
    if a not in AXES or b not in AXES:
        raise ValueError(f"Axes must be in {AXES}, got ({a!r}, {b!r})")
    before, after = [], []
    for axis, qubit in ((a, qubits[0]), (b, qubits[1])):
        if axis == "x":
            before.append(GateInstance("h", (qubit,)))
            after.append(GateInstance("h", (qubit,)))
        elif axis == "y":
            before.append(GateInstance("rx", (qubit,), angle=math.pi / 2))
            after.append(GateInstance("rx", (qubit,), angle=-math.pi / 2))
    coupling = GateInstance("rzz", tuple(qubits), param_slot=param_slot, scale=scale, angle=angle)
    return before + [coupling] + after


def _apply_inplace(amplitudes, n, gate, theta):
    kind, qubits = gate.kind, gate.qubits
    if kind == "h":
        _apply_single(amplitudes, n, qubits[0], _HADAMARD)
    elif kind == "rx":
        _apply_single(amplitudes, n, qubits[0], _rx(theta))
    elif kind == "ry":
        _apply_single(amplitudes, n, qubits[0], _ry(theta))
    elif kind == "rz":
        _apply_rz(amplitudes, n, qubits[0], theta)
    elif kind == "rzz":
        _apply_rzz(amplitudes, n, qubits[0], qubits[1], theta)
    elif kind == "cx":
        _apply_cx(amplitudes, n, qubits[0], qubits[1])
    else:
        for part in decompose_rab(gate.axes[0], gate.axes[1], qubits=qubits, angle=theta):
            _apply_inplace(amplitudes, n, part, part.angle)


def apply_gate(state: StateVector, gate: GateInstance, theta: float = 0.0) -> StateVector:
    """Unitary image of ``state`` under ``gate`` at angle ``theta`` (ignored for H and CX)"""
    if max(gate.qubits) >= state.n_qubits:
        raise ValueError(f"Qubit index out of range in {gate.qubits} (n={state.n_qubits})")
    amplitudes = state.amplitudes.copy()
    _apply_inplace(amplitudes, state.n_qubits, gate, theta)
    return StateVector(state.n_qubits, amplitudes)


def simulate(circuit: Circuit) -> StateVector:
    state = StateVector.zero(circuit.n_qubits)
    for gate in circuit.gates:
        _apply_inplace(state.amplitudes, circuit.n_qubits, gate, gate.theta(circuit.params))
    return state


def exact_probabilities(circuit: Circuit) -> np.ndarray:
    return simulate(circuit).probabilities()


def sample_counts(probabilities: np.ndarray, n_runs: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial shot counts per basis index"""
    if n_runs < 1:
        raise ValueError(f"n_runs must be at least 1, got {n_runs}")
    weights = np.clip(probabilities, 0.0, None)
    return rng.multinomial(n_runs, weights / weights.sum())


def run_shots(circuit: Circuit, n_runs: int, rng: np.random.Generator) -> dict:
    counts = sample_counts(exact_probabilities(circuit), n_runs, rng)
    return {
        bitstring(int(index), circuit.n_qubits): int(counts[index])
        for index in np.flatnonzero(counts)
    }


# Structural metrics


def basis_gates(circuit: Circuit, rewrite_rzz: bool = False):
    """Yield the circuit in the {H, Rx, Ry, Rz, Rzz} basis, or {H, Rx, Ry, Rz, CX}"""
    for gate in circuit.gates:
        if gate.kind == "rab":
            parts = decompose_rab(gate.axes[0], gate.axes[1], gate.param_slot,
                                  gate.qubits, gate.scale, gate.angle)
        else:
            parts = [gate]
        for part in parts:
            if rewrite_rzz and part.kind == "rzz":
                control, target = part.qubits
                yield GateInstance("cx", (control, target))
                yield GateInstance("rz", (target,), param_slot=part.param_slot,
                                   scale=part.scale, angle=part.angle)
                yield GateInstance("cx", (control, target))
            else:
                yield part


def _longest_path(n_qubits, gates) -> int:
    levels = [0] * n_qubits
    for gate in gates:
        level = 1 + max(levels[q] for q in gate.qubits)
        for qubit in gate.qubits:
            levels[qubit] = level
    return max(levels, default=0)


def circuit_depth(circuit: Circuit) -> int:
    """Depth in the {H, Rx, Ry, Rz, Rzz} basis"""
    return _longest_path(circuit.n_qubits, basis_gates(circuit))


def circuit_depth_cx(circuit: Circuit) -> int:
    """Depth in the {H, Rx, Ry, Rz, CX} basis"""
    return _longest_path(circuit.n_qubits, basis_gates(circuit, rewrite_rzz=True))


def gate_census(circuit: Circuit) -> Counter:
    return Counter(gate.label for gate in basis_gates(circuit, rewrite_rzz=True))


# Text forms


def dumps_circuit(circuit: Circuit) -> str:
    """Line-oriented record: a header, then one gate per line with its parameter value"""
    lines = [f"# circuit n_qubits={circuit.n_qubits} n_params={circuit.n_params}"]
    for gate in circuit.gates:
        kind = f"rab:{gate.axes}" if gate.kind == "rab" else gate.kind
        fields = [kind, *(str(q) for q in gate.qubits)]
        if gate.param_slot is not None:
            fields += [
                f"slot={gate.param_slot}",
                f"scale={gate.scale!r}",
                f"value={float(circuit.params[gate.param_slot])!r}",
            ]
        if gate.angle is not None:
            fields.append(f"angle={gate.angle!r}")
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def loads_circuit(text: str) -> Circuit:
    lines = [line for line in text.splitlines() if line.strip()]
    header = dict(token.split("=") for token in lines[0].lstrip("#").split()[1:])
    circuit = Circuit(int(header["n_qubits"]), params=np.zeros(int(header["n_params"])))
    for line in lines[1:]:
        tokens = line.split()
        kind, axes = tokens[0], None
        if kind.startswith("rab:"):
            kind, axes = "rab", kind[4:]
        qubits = tuple(int(t) for t in tokens[1:] if "=" not in t)
        options = dict(t.split("=") for t in tokens[1:] if "=" in t)
        slot = int(options["slot"]) if "slot" in options else None
        if slot is not None:
            circuit.params[slot] = float(options["value"])
        circuit.append(GateInstance(
            kind, qubits, param_slot=slot, axes=axes,
            scale=float(options.get("scale", 1.0)),
            angle=float(options["angle"]) if "angle" in options else None,
        ))
    return circuit


def draw_circuit(circuit: Circuit) -> str:
    """Wire diagram with one column per dependency layer"""
    levels = [0] * circuit.n_qubits
    columns = []
    for gate in circuit.gates:
        level = max(levels[q] for q in gate.qubits)
        for qubit in gate.qubits:
            levels[qubit] = level + 1
        if level == len(columns):
            columns.append({})
        text = gate.label
        if gate.kind in PARAMETERIZED_KINDS:
            text += f"({gate.theta(circuit.params):.2f})"
        for qubit in gate.qubits:
            columns[level][qubit] = text

    rows = []
    for qubit in range(circuit.n_qubits):
        cells = []
        for column in columns:
            width = max(len(text) for text in column.values())
            cells.append(column.get(qubit, "").center(width, "-"))
        rows.append(f"q{qubit}: -" + "-".join(cells) + "-")
    return "\n".join(rows)
