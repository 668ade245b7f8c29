"""
The single-cycle Floquet operator as a backend-independent gate program.

Rotations follow R_P(theta) = exp(-i theta P / 2) for P in {X, Z, ZZ}. A cycle
applies RX on every qubit, then one RZZ per coupling layer by layer, then RZ
on every qubit.
"""
import math
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple

import numpy as np

from floquet.errors import UnsupportedAngle
from floquet.lattice import LatticeGraph

LOCAL_GATES = {
    'Sdg': np.diag([1.0, -1.0j]),
}


class GateKind(IntEnum):
    """Gate types a Floquet cycle is made of."""
    RX = 0
    RZ = 1
    RZZ = 2


@dataclass(frozen=True)
class FloquetParams():
    """
    Rotation angles of one drive period, in radians.

    theta_j = -J T carries the sign of the coupling, theta_x = h_x T and
    theta_z = h_z T.
    """
    theta_x: float
    theta_z: float
    theta_j: float = -math.pi / 2

    def __post_init__(self):
        for name in ('theta_x', 'theta_z', 'theta_j'):
            if not math.isfinite(getattr(self, name)):
                raise ValueError('{} must be finite'.format(name))

    @classmethod
    def from_pi_units(cls, theta_x, theta_z, theta_j=-0.5):
        """Build from angles given as multiples of pi."""
        return cls(theta_x * math.pi, theta_z * math.pi, theta_j * math.pi)

    @property
    def epsilon(self) -> float:
        """Deviation of the transverse kick from a perfect pi flip."""
        return epsilon_of(self)


@dataclass(frozen=True)
class Gate():
    """One rotation of the program."""
    kind: GateKind
    targets: Tuple[int, ...]
    angle: float
    layer_tag: int

    def __post_init__(self):
        arity = 2 if self.kind == GateKind.RZZ else 1
        if len(self.targets) != arity:
            raise ValueError('{} acts on {} qubit(s)'.format(
                self.kind.name, arity))
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise ValueError('RZZ needs two distinct qubits')


@dataclass(frozen=True)
class GateProgram():
    """Gates of one Floquet cycle in application order."""
    gates: Tuple[Gate, ...]
    num_qubits: int
    num_layers: int
    cz_equivalent_count: int

    def __iter__(self):
        return iter(self.gates)

    def __len__(self):
        return len(self.gates)

    def layer(self, tag: int) -> Tuple[Gate, ...]:
        """Gates sharing a layer tag."""
        return tuple(g for g in self.gates if g.layer_tag == tag)

    @property
    def tags(self) -> Tuple[int, ...]:
        """Layer tags in application order."""
        return tuple(range(self.num_layers + 2))


@dataclass(frozen=True)
class CzDecomposition():
    """R_ZZ(-pi/2) = exp(i phase) CZ (Sdg x Sdg)."""
    phase: float
    two_qubit: str
    locals: Tuple[str, str]

    def unitary(self) -> np.ndarray:
        """The 4x4 matrix the decomposition stands for."""
        cz = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
        first, second = (LOCAL_GATES[name] for name in self.locals)
        return np.exp(1.0j * self.phase) * cz @ np.kron(first, second)


def epsilon_of(params: FloquetParams) -> float:
    """epsilon = (pi - theta_x) / 2."""
    return (math.pi - params.theta_x) / 2


def floquet_cycle(params: FloquetParams, graph: LatticeGraph) -> GateProgram:
    """
    Gate program of one Floquet cycle on graph.

    Tag 0 holds the RX kicks, tags 1..n the RZZ layers in the graph's layer
    order and tag n + 1 the RZ rotations.
    """
    gates = [Gate(GateKind.RX, (q,), params.theta_x, 0)
             for q in range(graph.num_qubits)]
    for tag, layer in enumerate(graph.layers, 1):
        gates += [Gate(GateKind.RZZ, edge, params.theta_j, tag)
                  for edge in layer]
    last = len(graph.layers) + 1
    gates += [Gate(GateKind.RZ, (q,), params.theta_z, last)
              for q in range(graph.num_qubits)]
    return GateProgram(tuple(gates), graph.num_qubits, len(graph.layers),
                       len(graph.edges))


def rzz_cz_decomposition(angle: float) -> CzDecomposition:
    """CZ form of R_ZZ(angle); only angle = -pi/2 has one."""
    if abs(angle + math.pi / 2) > 1e-12:
        raise UnsupportedAngle(
            'no CZ decomposition for R_ZZ({!r})'.format(angle))
    return CzDecomposition(math.pi / 4, 'CZ', ('Sdg', 'Sdg'))


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1.0j * s], [-1.0j * s, c]])


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rzz_matrix(theta: float) -> np.ndarray:
    """Diagonal 4x4; basis index 2 a + b for qubits (a, b)."""
    minus, plus = np.exp(-0.5j * theta), np.exp(0.5j * theta)
    return np.diag([minus, plus, plus, minus])


def gate_matrix(gate: Gate) -> np.ndarray:
    """Dense matrix of a gate."""
    if gate.kind == GateKind.RX:
        return rx_matrix(gate.angle)
    if gate.kind == GateKind.RZ:
        return rz_matrix(gate.angle)
    return rzz_matrix(gate.angle)


def program_text(program: GateProgram) -> str:
    """One '{kind} {targets...} {angle}' line per gate."""
    lines = ['{} {} {!r}'.format(g.kind.name, ' '.join(map(str, g.targets)),
                                 float(g.angle))
             for g in program]
    return '\n'.join(lines) + '\n'


def gate_counts(program: GateProgram, n_cycles: int = 1) -> Counter:
    """
    Gates per kind over n_cycles, with 'CZ' the circuit volume.

    RZZ gates with a CZ form also count their local gates.
    """
    counts = Counter()
    for gate in program:
        counts[gate.kind.name] += n_cycles
        if gate.kind != GateKind.RZZ:
            continue
        try:
            locals_ = rzz_cz_decomposition(gate.angle).locals
        except UnsupportedAngle:
            continue
        for name in locals_:
            counts[name] += n_cycles
    counts['CZ'] = program.cz_equivalent_count * n_cycles
    return counts
