"""
Dense state-vector simulation, the reference every other engine is checked
against.

Qubit q is bit q of the amplitude index: qubit 0 is the least significant
bit. Gates act in place on reshaped views of the amplitude array.
"""
import logging
from pathlib import Path
from typing import Union

import numpy as np

from floquet.circuit import FloquetParams, Gate, GateKind, GateProgram, \
        floquet_cycle, rx_matrix
from floquet.errors import CapExceeded, FloquetError
from floquet.lattice import InitialPattern, LatticeGraph, MeasureSet

logger = logging.getLogger(__name__)

DEFAULT_QUBIT_CAP = 26

PAULIS = {
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}


def _check_cap(num_qubits, cap):
    if num_qubits > cap:
        raise CapExceeded('{} qubits exceed the state-vector cap of {}'.format(
            num_qubits, cap))


class StateVector():
    """2**L complex amplitudes, owned and mutated in place."""

    def __init__(self, amplitudes, cap: int = DEFAULT_QUBIT_CAP):
        amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        size = amplitudes.size
        num_qubits = size.bit_length() - 1
        if amplitudes.ndim != 1 or size < 2 or size != 1 << num_qubits:
            raise FloquetError('amplitude count must be a power of two')
        _check_cap(num_qubits, cap)
        self.amplitudes = amplitudes
        self.num_qubits = num_qubits

    def copy(self):
        return StateVector(self.amplitudes.copy(), cap=self.num_qubits)

    def norm(self) -> float:
        """Squared norm of the amplitudes."""
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def _bit_view(self, qubit):
        return self.amplitudes.reshape(-1, 2, 1 << qubit)


def init_product(pattern: InitialPattern,
                 cap: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """The computational-basis state |bits>."""
    _check_cap(len(pattern), cap)
    amplitudes = np.zeros(1 << len(pattern), dtype=np.complex128)
    index = sum(bit << q for q, bit in enumerate(pattern.bits))
    amplitudes[index] = 1.0
    return StateVector(amplitudes, cap)


def apply_matrix(state: StateVector, matrix, qubit: int) -> StateVector:
    """Apply a 2x2 matrix to one qubit."""
    view = state._bit_view(qubit)
    view[...] = np.einsum('ij,ajb->aib', matrix, view)
    return state


def _apply_phase(state, qubit, minus, plus):
    view = state._bit_view(qubit)
    view[:, 0, :] *= minus
    view[:, 1, :] *= plus


def _apply_zz_phase(state, first, second, theta):
    low, high = sorted((first, second))
    view = state.amplitudes.reshape(-1, 2, 1 << (high - low - 1), 2, 1 << low)
    same, differ = np.exp(-0.5j * theta), np.exp(0.5j * theta)
    view[:, 0, :, 0, :] *= same
    view[:, 1, :, 1, :] *= same
    view[:, 0, :, 1, :] *= differ
    view[:, 1, :, 0, :] *= differ


def apply_cz(state: StateVector, first: int, second: int) -> StateVector:
    """Controlled-Z between two qubits."""
    low, high = sorted((first, second))
    view = state.amplitudes.reshape(-1, 2, 1 << (high - low - 1), 2, 1 << low)
    view[:, 1, :, 1, :] *= -1.0
    return state


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Apply one rotation in place."""
    if max(gate.targets) >= state.num_qubits:
        raise FloquetError('gate on qubit {} of a {}-qubit state'.format(
            max(gate.targets), state.num_qubits))
    if gate.kind == GateKind.RX:
        apply_matrix(state, rx_matrix(gate.angle), gate.targets[0])
    elif gate.kind == GateKind.RZ:
        _apply_phase(state, gate.targets[0],
                     np.exp(-0.5j * gate.angle), np.exp(0.5j * gate.angle))
    else:
        _apply_zz_phase(state, gate.targets[0], gate.targets[1], gate.angle)
    return state


def apply_program(state: StateVector, program: GateProgram) -> StateVector:
    """Apply every gate of a program in order."""
    for gate in program:
        apply_gate(state, gate)
    return state


def apply_pauli(state: StateVector, qubit: int, label: str) -> StateVector:
    """Apply X, Y or Z to one qubit; 'I' is a no-op."""
    if label == 'I':
        return state
    if label == 'Z':
        _apply_phase(state, qubit, 1.0, -1.0)
        return state
    return apply_matrix(state, PAULIS[label], qubit)


def expect_z(state: StateVector, qubit: int) -> float:
    """<Z_qubit>."""
    if not 0 <= qubit < state.num_qubits:
        raise FloquetError('no qubit {} in a {}-qubit state'.format(
            qubit, state.num_qubits))
    weights = np.abs(state._bit_view(qubit)) ** 2
    return float(weights[:, 0, :].sum() - weights[:, 1, :].sum())


def z_expectations(state: StateVector) -> np.ndarray:
    """<Z_j> for every qubit."""
    probs = state.probabilities()
    out = np.empty(state.num_qubits)
    for qubit in range(state.num_qubits):
        view = probs.reshape(-1, 2, 1 << qubit)
        out[qubit] = view[:, 0, :].sum() - view[:, 1, :].sum()
    return out


def sample_bits(state: StateVector, qubits: MeasureSet, n_shots: int,
                seed=None) -> np.ndarray:
    """
    Computational-basis measurements restricted to the measure set.

    Returns an (n_shots, |A|) array of 0/1 outcomes; seed is anything
    numpy.random.default_rng accepts.
    """
    if n_shots < 1:
        raise FloquetError('need at least one shot')
    rng = np.random.default_rng(seed)
    probs = state.probabilities()
    probs /= probs.sum()
    outcomes = rng.choice(probs.size, size=n_shots, p=probs)
    shifts = np.asarray(qubits.qubits, dtype=np.int64)
    return ((outcomes[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def evolve_z(pattern: InitialPattern, params: FloquetParams,
             graph: LatticeGraph, n_steps: int,
             cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """<Z_j> after 0..n_steps cycles, one row per step."""
    state = init_product(pattern, cap)
    program = floquet_cycle(params, graph)
    rows = [z_expectations(state)]
    for _ in range(n_steps):
        apply_program(state, program)
        rows.append(z_expectations(state))
    drift = abs(state.norm() - 1.0)
    if drift > 1e-10:
        logger.warning('norm drifted by %.3e over %d cycles', drift, n_steps)
    return np.array(rows)


def dump_amplitudes(state: StateVector, path: Union[str, Path]):
    """Write amplitudes as little-endian interleaved real/imag doubles."""
    state.amplitudes.astype('<c16').tofile(str(path))


def load_amplitudes(path: Union[str, Path],
                    cap: int = DEFAULT_QUBIT_CAP) -> StateVector:
    """Read a dump written by dump_amplitudes."""
    return StateVector(np.fromfile(str(path), dtype='<c16'), cap)
