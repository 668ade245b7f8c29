"""Matrix-product-state TEBD for open chains, in Vidal form."""
import logging
from typing import List

import numpy as np

from floquet.circuit import FloquetParams, GateKind, GateProgram, \
        floquet_cycle, gate_matrix
from floquet.errors import BackendGraphMismatch, DimensionMismatch
from floquet.lattice import InitialPattern, LatticeGraph, LatticeKind
from floquet.linalg import pseudo_inverse, scale_axis, truncated_svd

logger = logging.getLogger(__name__)

_ONE = np.ones(1)


class MpsState():
    """
    Site tensors Gamma[i] of shape (left, 2, right) and bond weights
    lambda[i] between sites i and i + 1.

    cum_truncation adds up the squared singular-value weight thrown away by
    every truncation since initialisation.
    """

    def __init__(self, gammas: List[np.ndarray], lambdas: List[np.ndarray],
                 chi_max: int = None):
        if len(lambdas) != len(gammas) - 1:
            raise DimensionMismatch('need one bond weight vector per bond')
        if chi_max is not None and chi_max < 1:
            raise ValueError('chi_max must be positive')
        self.gammas = gammas
        self.lambdas = lambdas
        self.chi_max = chi_max
        self.cum_truncation = 0.0

    @property
    def num_sites(self) -> int:
        return len(self.gammas)

    def left_weights(self, site):
        return self.lambdas[site - 1] if site > 0 else _ONE

    def right_weights(self, site):
        return self.lambdas[site] if site < self.num_sites - 1 else _ONE

    def bond_dimensions(self):
        """Dimension of every internal bond."""
        return [len(weights) for weights in self.lambdas]


def mps_init_product(pattern: InitialPattern, chi_max: int = None) -> MpsState:
    """Product state with every bond of dimension one."""
    gammas = []
    for bit in pattern.bits:
        site = np.zeros((1, 2, 1), dtype=np.complex128)
        site[0, bit, 0] = 1.0
        gammas.append(site)
    lambdas = [np.ones(1) for _ in range(len(pattern) - 1)]
    return MpsState(gammas, lambdas, chi_max)


def apply_single(state: MpsState, matrix, site: int) -> MpsState:
    """Contract a one-site gate into Gamma[site]."""
    state.gammas[site] = np.einsum('ij,ajb->aib', matrix, state.gammas[site])
    return state


def apply_two(state: MpsState, matrix, site: int) -> MpsState:
    """
    Apply a 4x4 gate on sites (site, site + 1).

    The gate basis index is 2 s_site + s_next. The two-site block is split
    by a truncated SVD and the outer bond weights divided back out.
    """
    left_w = state.left_weights(site)
    bond_w = state.lambdas[site]
    right_w = state.right_weights(site + 1)
    first = scale_axis(scale_axis(state.gammas[site], 0, left_w), 2, bond_w)
    second = scale_axis(state.gammas[site + 1], 2, right_w)
    theta = np.tensordot(first, second, axes=([2], [0]))
    gate = np.reshape(matrix, (2, 2, 2, 2))
    theta = np.einsum('uvst,astb->auvb', gate, theta)
    chi_left, chi_right = theta.shape[0], theta.shape[3]

    split = truncated_svd(theta.reshape(chi_left * 2, 2 * chi_right),
                          state.chi_max)
    kept = len(split.s)
    u = split.u.reshape(chi_left, 2, kept)
    vh = split.vh.reshape(kept, 2, chi_right)
    state.gammas[site] = scale_axis(u, 0, pseudo_inverse(left_w))
    state.gammas[site + 1] = scale_axis(vh, 2, pseudo_inverse(right_w))
    state.lambdas[site] = split.s
    if split.discarded > 0.0:
        state.cum_truncation += split.discarded
        logger.debug('bond %d truncated to %d, discarded %.3e',
                     site, kept, split.discarded)
    return state


def mps_apply_program(state: MpsState, program: GateProgram) -> MpsState:
    """Apply a gate program whose couplings are nearest-neighbour bonds."""
    for gate in program:
        if gate.kind == GateKind.RZZ:
            low, high = sorted(gate.targets)
            if high != low + 1:
                raise BackendGraphMismatch(
                    'MPS gates must act on neighbouring sites, got {}'.format(
                        gate.targets))
            apply_two(state, gate_matrix(gate), low)
        else:
            apply_single(state, gate_matrix(gate), gate.targets[0])
    return state


def mps_cycle(state: MpsState, params: FloquetParams,
              graph: LatticeGraph) -> MpsState:
    """One Floquet cycle on a chain."""
    if graph.kind != LatticeKind.Chain:
        raise BackendGraphMismatch(
            'the MPS engine runs on chains, not {}'.format(graph.kind.name))
    if graph.num_qubits != state.num_sites:
        raise DimensionMismatch('{} sites for a {}-qubit chain'.format(
            state.num_sites, graph.num_qubits))
    return mps_apply_program(state, floquet_cycle(params, graph))


def _site_block(state, site):
    block = scale_axis(state.gammas[site], 0, state.left_weights(site))
    return scale_axis(block, 2, state.right_weights(site))


def mps_expect_z(state: MpsState, site: int) -> float:
    """<Z_site> from the site tensor and its two bond weight vectors."""
    weights = np.abs(_site_block(state, site)) ** 2
    up, down = weights[:, 0, :].sum(), weights[:, 1, :].sum()
    return float((up - down) / (up + down))


def mps_z_expectations(state: MpsState) -> np.ndarray:
    return np.array([mps_expect_z(state, i) for i in range(state.num_sites)])


def mps_norm(state: MpsState) -> float:
    """Squared norm by a left-to-right transfer-matrix sweep."""
    transfer = np.ones((1, 1), dtype=np.complex128)
    for site in range(state.num_sites):
        block = scale_axis(state.gammas[site], 2, state.right_weights(site))
        transfer = np.einsum('ab,asc,bsd->cd', transfer, block, block.conj())
    return float(transfer[0, 0].real)


def mps_to_dense(state: MpsState) -> np.ndarray:
    """Amplitude vector with site 0 as the least significant bit."""
    if state.num_sites > 14:
        raise DimensionMismatch('dense conversion is limited to 14 sites')
    psi = np.ones((1,), dtype=np.complex128)
    for site in range(state.num_sites):
        block = scale_axis(state.gammas[site], 2, state.right_weights(site))
        psi = np.tensordot(psi, block, axes=([-1], [0]))
    psi = psi.reshape((2,) * state.num_sites)
    return psi.transpose(tuple(reversed(range(state.num_sites)))).ravel()
