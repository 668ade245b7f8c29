"""Test the Floquet gate program."""
import math
import unittest

from hypothesis import given, settings
from hypothesis.strategies import floats
import numpy as np

from floquet.circuit import FloquetParams, Gate, GateKind, epsilon_of, \
        floquet_cycle, gate_counts, gate_matrix, program_text, rx_matrix, \
        rz_matrix, rzz_cz_decomposition, rzz_matrix
from floquet.errors import UnsupportedAngle
from floquet.lattice import build_chain, build_heavy_hex, device_graph, \
        load_coupling_map
from tests.oracles import floquet_unitary, program_unitary

ANGLE = floats(-2 * math.pi, 2 * math.pi, allow_nan=False, allow_infinity=False)


class TestParams(unittest.TestCase):
    """Test the drive parameters."""
    def test_epsilon(self):
        """A perfect pi kick has epsilon zero."""
        self.assertAlmostEqual(FloquetParams(math.pi, 0.0).epsilon, 0.0)
        params = FloquetParams(math.pi - 0.2, 0.0)
        self.assertAlmostEqual(epsilon_of(params), 0.1)

    def test_pi_units(self):
        """Angles in units of pi are scaled once."""
        params = FloquetParams.from_pi_units(0.9, 0.25)
        self.assertAlmostEqual(params.theta_x, 0.9 * math.pi)
        self.assertAlmostEqual(params.theta_z, 0.25 * math.pi)
        self.assertAlmostEqual(params.theta_j, -math.pi / 2)

    def test_not_finite(self):
        """NaN and infinite angles are rejected."""
        self.assertRaises(ValueError, FloquetParams, math.nan, 0.0)
        self.assertRaises(ValueError, FloquetParams, 0.0, math.inf)
        self.assertRaises(ValueError, FloquetParams, 0.0, 0.0, -math.inf)


class TestProgram(unittest.TestCase):
    """Test building a cycle."""
    def test_structure(self):
        """Kicks first, one tag per coupling layer, fields last."""
        graph = build_heavy_hex(2, 2)
        program = floquet_cycle(FloquetParams(1.0, 0.5), graph)
        size = graph.num_qubits
        self.assertEqual(len(program), 2 * size + len(graph.edges))
        self.assertEqual(program.tags, (0, 1, 2, 3, 4))
        self.assertEqual([g.kind for g in program.layer(0)], [GateKind.RX] * size)
        self.assertEqual([g.kind for g in program.layer(4)], [GateKind.RZ] * size)
        for tag, layer in enumerate(graph.layers, 1):
            self.assertEqual(tuple(g.targets for g in program.layer(tag)), layer)
        tags = [g.layer_tag for g in program]
        self.assertEqual(tags, sorted(tags))
        self.assertEqual(program.cz_equivalent_count, len(graph.edges))

    def test_first_gate(self):
        """The text form starts with the kick on qubit 0."""
        text = program_text(floquet_cycle(FloquetParams(1.0, 0.5),
                                          build_chain(3)))
        lines = text.splitlines()
        self.assertEqual(lines[0], 'RX 0 1.0')
        self.assertTrue(lines[3].startswith('RZZ 0 1 '))
        self.assertEqual(lines[-1], 'RZ 2 0.5')
        self.assertEqual(len(lines), 8)

    def test_gate_counts(self):
        """The device cycle holds 150 CZ-equivalent gates."""
        graph = device_graph()
        counts = gate_counts(floquet_cycle(FloquetParams(1.0, 0.5), graph), 3)
        self.assertEqual(counts['CZ'], 450)
        self.assertEqual(counts['RZZ'], 450)
        self.assertEqual(counts['RX'], 399)
        self.assertEqual(counts['RZ'], 399)
        self.assertEqual(counts['Sdg'], 900)
        other = gate_counts(
            floquet_cycle(FloquetParams(1.0, 0.5, -1.0), graph), 3)
        self.assertEqual(other['CZ'], 450)
        self.assertNotIn('Sdg', other)

    @given(ANGLE, ANGLE, ANGLE)
    @settings(max_examples=25, deadline=None)
    def test_matches_hamiltonians(self, theta_x, theta_z, theta_j):
        """The gate product equals exp(-i H_2) exp(-i H_1)."""
        params = FloquetParams(theta_x, theta_z, theta_j)
        for graph in [build_chain(4), load_coupling_map('0 1\n0 2\n0 3'),
                      load_coupling_map('0 1\n1 2\n0 2')]:
            program = floquet_cycle(params, graph)
            np.testing.assert_allclose(program_unitary(program),
                                       floquet_unitary(params, graph),
                                       atol=1e-10)

    def test_bad_gates(self):
        """Gates check their arity."""
        self.assertRaises(ValueError, Gate, GateKind.RX, (0, 1), 0.1, 0)
        self.assertRaises(ValueError, Gate, GateKind.RZZ, (0,), 0.1, 1)
        self.assertRaises(ValueError, Gate, GateKind.RZZ, (2, 2), 0.1, 1)


class TestMatrices(unittest.TestCase):
    """Test the rotation matrices."""
    @given(ANGLE)
    @settings(max_examples=25, deadline=None)
    def test_unitary(self, theta):
        """Every rotation is unitary."""
        for matrix in [rx_matrix(theta), rz_matrix(theta), rzz_matrix(theta)]:
            np.testing.assert_allclose(matrix @ matrix.conj().T,
                                       np.eye(len(matrix)), atol=1e-12)

    def test_pi_kick(self):
        """RX(pi) is -iX."""
        np.testing.assert_allclose(rx_matrix(math.pi),
                                   [[0, -1j], [-1j, 0]], atol=1e-15)

    def test_rzz_phases(self):
        """Aligned spins pick up exp(-i theta/2)."""
        theta = 0.3
        np.testing.assert_allclose(
            np.diag(rzz_matrix(theta)),
            np.exp(-0.5j * theta * np.array([1, -1, -1, 1])))

    def test_gate_matrix(self):
        """gate_matrix dispatches on the kind."""
        gate = Gate(GateKind.RZ, (1,), 0.7, 2)
        np.testing.assert_allclose(gate_matrix(gate), rz_matrix(0.7))


class TestCzDecomposition(unittest.TestCase):
    """Test the CZ form of the default coupling."""
    def test_default_coupling(self):
        """R_ZZ(-pi/2) is a phase times CZ after two Sdg."""
        decomposition = rzz_cz_decomposition(-math.pi / 2)
        self.assertEqual(decomposition.two_qubit, 'CZ')
        self.assertEqual(decomposition.locals, ('Sdg', 'Sdg'))
        np.testing.assert_allclose(decomposition.unitary(),
                                   rzz_matrix(-math.pi / 2), atol=1e-12)

    def test_other_angles(self):
        """Any other angle has no CZ form."""
        self.assertRaises(UnsupportedAngle, rzz_cz_decomposition, math.pi / 2)
        self.assertRaises(UnsupportedAngle, rzz_cz_decomposition, -1.5)
        self.assertRaises(UnsupportedAngle, rzz_cz_decomposition, 0.0)
