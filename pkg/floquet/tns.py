"""
Gauged tensor-network states on arbitrary graphs.

Every vertex holds a tensor whose axis 0 is the physical leg and whose
remaining axes follow the vertex's sorted incident edges. Every edge holds a
positive gauge vector, the diagonal of the gauge tensor sitting between the
two vertex tensors. Two-qubit gates are applied by simple-update TEBD:

    a. absorb the gauges of the other legs into both vertices,
    b. QR-reduce each vertex so only the physical and shared legs remain,
    c. contract both reduced tensors with the edge gauge and the gate,
    d. split by SVD,
    e. keep at most chi_max singular values as the new edge gauge,
    f. reattach the isometries of step b,
    g. divide the surrounding gauges back out.

With identity gates the same update only regauges the state; sweeping it
over the graph until the state reaches the Vidal gauge is the trivial simple
update (tSU). In the Vidal gauge a one-site expectation needs nothing but the
vertex tensor and its adjacent gauges.
"""
import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg as spla

from floquet.circuit import FloquetParams, GateKind, GateProgram, \
        floquet_cycle, gate_matrix
from floquet.errors import DimensionMismatch, FloquetError, GaugeTooLoose, \
        NotConverged
from floquet.lattice import Edge, InitialPattern, LatticeGraph
from floquet.linalg import pseudo_inverse, scale_axis, truncated_svd

logger = logging.getLogger(__name__)

# Bond values below this fraction of the largest are dropped. Their inverses
# would amplify round-off past the regauge tolerance.
GAUGE_CUTOFF = 1e-9
REGAUGE_TOL = 1e-8
EXPECTATION_GAUGE_TOL = 1e-6
MAX_SWEEPS = 100
DENSE_LIMIT = 14

IDENTITY_4 = np.eye(4, dtype=np.complex128)


class RegaugePolicy(IntEnum):
    """When tns_cycle runs the trivial simple update."""
    EveryStep = 0
    BeforeMeasurement = 1


@dataclass(frozen=True)
class GaugeReport():
    """Outcome of one tsu_regauge call."""
    c_history: Tuple[float, ...]
    converged: bool
    sweeps: int
    tol: float

    def __post_init__(self):
        if not self.c_history:
            raise ValueError('a gauge report needs at least one sweep')
        if self.converged != (self.c_history[-1] <= self.tol):
            raise ValueError('converged must match the last gauge error')


class GaugedTns():
    """Vertex tensors and edge gauges of a tensor-network state on graph."""

    def __init__(self, graph: LatticeGraph, tensors: List[np.ndarray],
                 gauges: Dict[Edge, np.ndarray], chi_max: Optional[int] = None):
        if chi_max is not None and chi_max < 1:
            raise ValueError('chi_max must be positive')
        if len(tensors) != graph.num_qubits:
            raise DimensionMismatch('need one tensor per vertex')
        self.graph = graph
        self.tensors = tensors
        self.gauges = gauges
        self.chi_max = chi_max
        self.cum_truncation = 0.0
        self.reports: List[GaugeReport] = []
        self._legs = [{edge: axis for axis, edge
                       in enumerate(graph.incident_edges(v), 1)}
                      for v in range(graph.num_qubits)]
        self.check_dimensions()

    def leg(self, vertex: int, edge: Edge) -> int:
        """Tensor axis of vertex that carries edge."""
        return self._legs[vertex][edge]

    def check_dimensions(self):
        for vertex, tensor in enumerate(self.tensors):
            if tensor.ndim != 1 + self.graph.degree(vertex) \
                    or tensor.shape[0] != 2:
                raise DimensionMismatch(
                    'tensor of vertex {} has shape {}'.format(
                        vertex, tensor.shape))
        for edge in self.graph.edges:
            size = len(self.gauges[edge])
            for vertex in edge:
                if self.tensors[vertex].shape[self.leg(vertex, edge)] != size:
                    raise DimensionMismatch(
                        'edge {} has gauge {} but leg {} at vertex {}'.format(
                            edge, size,
                            self.tensors[vertex].shape[self.leg(vertex, edge)],
                            vertex))

    def bond_dimensions(self) -> Dict[Edge, int]:
        return {edge: len(weights) for edge, weights in self.gauges.items()}

    def absorbed(self, vertex: int, skip: Optional[Edge] = None):
        """Vertex tensor times the gauges of every leg except skip."""
        tensor = self.tensors[vertex]
        for edge in self.graph.incident_edges(vertex):
            if edge != skip:
                tensor = scale_axis(tensor, self.leg(vertex, edge),
                                    self.gauges[edge])
        return tensor


def tns_init_product(pattern: InitialPattern, graph: LatticeGraph,
                     chi_max: Optional[int] = None) -> GaugedTns:
    """Product state with every virtual leg of dimension one."""
    if len(pattern) != graph.num_qubits:
        raise DimensionMismatch('pattern of {} bits for {} vertices'.format(
            len(pattern), graph.num_qubits))
    tensors = []
    for vertex, bit in enumerate(pattern.bits):
        tensor = np.zeros((2,) + (1,) * graph.degree(vertex),
                          dtype=np.complex128)
        tensor[(bit,) + (0,) * graph.degree(vertex)] = 1.0
        tensors.append(tensor)
    gauges = {edge: np.ones(1) for edge in graph.edges}
    return GaugedTns(graph, tensors, gauges, chi_max)


def tns_apply_single(state: GaugedTns, matrix, vertex: int) -> GaugedTns:
    """Contract a one-site gate into the vertex tensor; gauges are untouched."""
    state.tensors[vertex] = np.tensordot(matrix, state.tensors[vertex],
                                         axes=([1], [0]))
    return state


def _reduce(state, vertex, edge):
    # Steps a and b: (Q, R, layout) with R shaped (r, 2, chi_edge).
    tensor = state.absorbed(vertex, skip=edge)
    axis = state.leg(vertex, edge)
    others = [a for a in range(1, tensor.ndim) if a != axis]
    perm = others + [0, axis]
    moved = tensor.transpose(perm)
    outer_shape = moved.shape[:-2]
    matrix = moved.reshape(int(np.prod(outer_shape)), 2 * tensor.shape[axis])
    q, r = spla.qr(matrix, mode='economic')
    return q, r.reshape(r.shape[0], 2, tensor.shape[axis]), \
        (perm, outer_shape)


def _rebuild(state, vertex, edge, q, reduced, layout):
    # Steps f and g.
    perm, outer_shape = layout
    kept = reduced.shape[2]
    merged = (q @ reduced.reshape(reduced.shape[0], 2 * kept))
    tensor = merged.reshape(tuple(outer_shape) + (2, kept))
    tensor = tensor.transpose(np.argsort(perm))
    for other in state.graph.incident_edges(vertex):
        if other != edge:
            tensor = scale_axis(tensor, state.leg(vertex, other),
                                pseudo_inverse(state.gauges[other],
                                               GAUGE_CUTOFF))
    state.tensors[vertex] = np.ascontiguousarray(tensor)


def tns_apply_two(state: GaugedTns, edge: Edge, matrix) -> GaugedTns:
    """
    Apply a 4x4 gate on edge by simple-update TEBD.

    The gate basis index is 2 s_first + s_second for edge = (first, second);
    either orientation of a graph edge is accepted.
    """
    first, second = edge
    key = (min(edge), max(edge))
    if key not in state.gauges:
        raise FloquetError('{} is not an edge of the graph'.format(edge))
    gate = np.reshape(matrix, (2, 2, 2, 2))
    if first > second:
        gate = gate.transpose(1, 0, 3, 2)
    low, high = key
    weights = state.gauges[key]
    for vertex in key:
        if state.tensors[vertex].shape[state.leg(vertex, key)] != len(weights):
            raise DimensionMismatch('edge {} leg dimension disagrees with its '
                                    'gauge at vertex {}'.format(key, vertex))

    q_low, r_low, layout_low = _reduce(state, low, key)
    q_high, r_high, layout_high = _reduce(state, high, key)
    theta = np.einsum('isx,x,jtx->istj', r_low, weights, r_high)
    theta = np.einsum('uvst,istj->iuvj', gate, theta)
    rows, cols = theta.shape[0], theta.shape[3]
    split = truncated_svd(theta.reshape(rows * 2, 2 * cols), state.chi_max,
                          GAUGE_CUTOFF)
    kept = len(split.s)

    state.gauges[key] = split.s
    _rebuild(state, low, key, q_low, split.u.reshape(rows, 2, kept),
             layout_low)
    _rebuild(state, high, key, q_high,
             split.vh.reshape(kept, 2, cols).transpose(2, 1, 0), layout_high)
    if split.discarded > 0.0:
        state.cum_truncation += split.discarded
        logger.debug('edge %s truncated to %d, discarded %.3e',
                     key, kept, split.discarded)
    return state


def vidal_gauge_error(state: GaugedTns) -> float:
    """
    Distance C from the Vidal gauge.

    For every vertex and leg, the vertex tensor with the other legs' gauges
    absorbed is contracted with its conjugate over everything but that leg;
    C is the largest Frobenius distance between the normalised result and
    the normalised identity.
    """
    worst = 0.0
    for vertex in range(state.graph.num_qubits):
        for edge in state.graph.incident_edges(vertex):
            tensor = state.absorbed(vertex, skip=edge)
            axis = state.leg(vertex, edge)
            moved = np.moveaxis(tensor, axis, 0)
            flat = moved.reshape(moved.shape[0], -1)
            gram = flat.conj() @ flat.T
            size = gram.shape[0]
            distance = np.linalg.norm(gram / np.linalg.norm(gram)
                                      - np.eye(size) / np.sqrt(size))
            worst = max(worst, float(distance))
    return worst


def _sweep_order(graph):
    forward = [edge for layer in graph.layers for edge in layer]
    return forward + forward[::-1]


def tsu_regauge(state: GaugedTns, tol: float = REGAUGE_TOL,
                max_sweeps: int = MAX_SWEEPS, strict: bool = False):
    """
    Trivial simple update until the Vidal-gauge error drops to tol.

    A sweep applies identity gates on every edge in layer order, then in
    reverse; C is measured once per sweep. Returns a GaugeReport; with
    strict=True a report that did not converge raises NotConverged.
    """
    if tol <= 0.0:
        raise ValueError('tol must be positive')
    if max_sweeps < 1:
        raise ValueError('max_sweeps must be positive')
    order = _sweep_order(state.graph)
    history = []
    for _ in range(max_sweeps):
        for edge in order:
            tns_apply_two(state, edge, IDENTITY_4)
        history.append(vidal_gauge_error(state))
        if history[-1] <= tol:
            break
    report = GaugeReport(tuple(history), history[-1] <= tol, len(history), tol)
    state.reports.append(report)
    if not report.converged:
        logger.warning('tSU stopped after %d sweeps at C = %.3e',
                       report.sweeps, history[-1])
        if strict:
            raise NotConverged('C = {:.3e} after {} sweeps'.format(
                history[-1], report.sweeps))
    else:
        logger.debug('tSU converged in %d sweeps, C = %.3e',
                     report.sweeps, history[-1])
    return report


def _local_weights(state, vertex):
    weights = np.abs(state.absorbed(vertex)) ** 2
    return weights.reshape(2, -1).sum(axis=1)


def local_norm(state: GaugedTns, vertex: int = 0) -> float:
    """Squared norm from one vertex and its gauges; exact in the Vidal gauge."""
    return float(_local_weights(state, vertex).sum())


def _check_gauge(state, tol, max_sweeps):
    error = vidal_gauge_error(state)
    if error <= tol:
        return
    logger.debug('C = %.3e exceeds %.1e before measuring; regauging',
                 error, tol)
    report = tsu_regauge(state, tol, max_sweeps)
    if not report.converged:
        raise GaugeTooLoose('C = {:.3e} exceeds {:.1e} after {} sweeps'.format(
            report.c_history[-1], tol, report.sweeps))


def tns_expect_z(state: GaugedTns, qubit: int,
                 tol: float = EXPECTATION_GAUGE_TOL,
                 max_sweeps: int = MAX_SWEEPS) -> float:
    """<Z_qubit> by local contraction, regauging first if C exceeds tol."""
    _check_gauge(state, tol, max_sweeps)
    up, down = _local_weights(state, qubit)
    return float((up - down) / (up + down))


def tns_z_expectations(state: GaugedTns,
                       tol: float = EXPECTATION_GAUGE_TOL,
                       max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """<Z_j> for every vertex, checking the gauge once."""
    _check_gauge(state, tol, max_sweeps)
    out = np.empty(state.graph.num_qubits)
    for vertex in range(state.graph.num_qubits):
        up, down = _local_weights(state, vertex)
        out[vertex] = (up - down) / (up + down)
    return out


def tns_apply_program(state: GaugedTns, program: GateProgram,
                      policy: Optional[RegaugePolicy] = None,
                      tol: float = REGAUGE_TOL,
                      max_sweeps: int = MAX_SWEEPS) -> GaugedTns:
    """
    Apply a gate program layer by layer.

    EveryStep regauges after each two-qubit layer, BeforeMeasurement once at
    the end; None never regauges.
    """
    last_tag = program.tags[-1]
    for tag in program.tags:
        gates = program.layer(tag)
        for gate in gates:
            if gate.kind == GateKind.RZZ:
                tns_apply_two(state, gate.targets, gate_matrix(gate))
            else:
                tns_apply_single(state, gate_matrix(gate), gate.targets[0])
        two_qubit = any(g.kind == GateKind.RZZ for g in gates)
        if policy == RegaugePolicy.EveryStep and two_qubit:
            tsu_regauge(state, tol, max_sweeps)
        elif policy == RegaugePolicy.BeforeMeasurement and tag == last_tag:
            tsu_regauge(state, tol, max_sweeps)
    return state


def tns_cycle(state: GaugedTns, params: FloquetParams, graph: LatticeGraph,
              policy: RegaugePolicy = RegaugePolicy.BeforeMeasurement,
              tol: float = REGAUGE_TOL,
              max_sweeps: int = MAX_SWEEPS) -> GaugedTns:
    """One Floquet cycle, regauged according to policy."""
    if graph.edges != state.graph.edges:
        raise DimensionMismatch('state and graph disagree on the edges')
    return tns_apply_program(state, floquet_cycle(params, graph),
                             RegaugePolicy(policy), tol, max_sweeps)


def regauge_log_rows(step: int, reports) -> List[Tuple[int, int, float]]:
    """(step, sweep, C) rows for every sweep of the given reports."""
    rows = []
    for report in reports:
        rows += [(step, sweep, value)
                 for sweep, value in enumerate(report.c_history, 1)]
    return rows


def contract_dense(state: GaugedTns) -> np.ndarray:
    """
    Full contraction into an amplitude vector, qubit 0 least significant.

    Test oracle only: vertices are contracted in index order, each edge
    gauge entering once through its lower endpoint.
    """
    graph = state.graph
    if graph.num_qubits > DENSE_LIMIT:
        raise DimensionMismatch('full contraction is limited to {} '
                                'vertices'.format(DENSE_LIMIT))
    psi, labels = None, []
    for vertex in range(graph.num_qubits):
        tensor = state.tensors[vertex]
        for edge in graph.incident_edges(vertex):
            if edge[0] == vertex:
                tensor = scale_axis(tensor, state.leg(vertex, edge),
                                    state.gauges[edge])
        tensor_labels = [('site', vertex)] + \
            [('edge', e) for e in graph.incident_edges(vertex)]
        if psi is None:
            psi, labels = tensor, tensor_labels
            continue
        shared = [lab for lab in tensor_labels if lab in labels]
        psi = np.tensordot(psi, tensor,
                           axes=([labels.index(lab) for lab in shared],
                                 [tensor_labels.index(lab) for lab in shared]))
        labels = [lab for lab in labels if lab not in shared] + \
            [lab for lab in tensor_labels if lab not in shared]
    order = [labels.index(('site', v)) for v in reversed(range(graph.num_qubits))]
    return psi.transpose(order).ravel()
