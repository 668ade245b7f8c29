"""Test noisy emulation, readout and error mitigation."""
import math
import unittest

from hypothesis import given, settings
from hypothesis.strategies import floats, lists
import numpy as np

from floquet.circuit import FloquetParams, floquet_cycle
from floquet.errors import CalibrationUnderflow, FloquetError, GridMismatch
from floquet.lattice import PatternKind, build_chain, load_coupling_map, \
        make_pattern, measure_set
from floquet.noise import Channel, EstimatedSeries, NoiseModel, \
        contaminate, effective_volume, estimate_f, fit_fidelity_decay, \
        mitigate, noise_schedule, readout_rescale, run_noisy, shot_estimate
from floquet.statevector import evolve_z
from tests.oracles import depolarized_density, z_operator


def series(values, channel=Channel.Raw, stderrs=None):
    values = np.asarray(values, dtype=float)
    if stderrs is None:
        stderrs = np.zeros_like(values)
    return EstimatedSeries(values, stderrs, None, channel)


class TestNoiseModel(unittest.TestCase):
    """Test the noise parameters."""
    def test_defaults(self):
        """Defaults are the device-like error rates."""
        model = NoiseModel()
        self.assertEqual(model.p_two_qubit, 4e-3)
        self.assertEqual(model.p_single_qubit, 4e-4)
        self.assertEqual(model.p_readout, 1.7e-2)
        self.assertFalse(model.gate_noise_free)
        self.assertTrue(NoiseModel.noiseless().gate_noise_free)

    def test_range(self):
        """Probabilities lie in [0, 1)."""
        self.assertRaises(ValueError, NoiseModel, -0.1)
        self.assertRaises(ValueError, NoiseModel, 4e-3, 1.0)
        self.assertRaises(ValueError, NoiseModel, 4e-3, 4e-4, 1.5)

    def test_series_checks(self):
        """Raw values are magnetisations; mitigated ones may exceed one."""
        self.assertRaises(ValueError, series, [0.5, 1.2])
        self.assertRaises(ValueError, series, [0.5], Channel.Raw, [-0.1])
        self.assertRaises(ValueError, EstimatedSeries, [0.5, 0.1], [0.1], None,
                          Channel.Raw)
        self.assertEqual(len(series([1.5, 2.0], Channel.Mitigated)), 2)


class TestShots(unittest.TestCase):
    """Test finite-shot estimates."""
    def test_deterministic_qubits(self):
        """Fully polarized qubits without readout error give zero spread."""
        rng = np.random.default_rng(0)
        mean, err = shot_estimate([1.0, -1.0, 1.0], 100, rng)
        self.assertAlmostEqual(mean, 1.0 / 3.0)
        self.assertAlmostEqual(err, 0.0, places=12)

    def test_unbiased(self):
        """Shot means scatter around the rescaled expectation."""
        rng = np.random.default_rng(5)
        z = np.array([0.3, -0.5, 0.8])
        mean, err = shot_estimate(z, 20000, rng, 0.05)
        self.assertGreater(err, 0.0)
        self.assertLess(abs(mean - 0.9 * z.mean()), 5 * err)

    def test_independent_marginals(self):
        """The standard error is the independent-binomial one."""
        rng = np.random.default_rng(8)
        z = np.array([0.0, 0.6, -0.6, 0.0])
        mean, err = shot_estimate(z, 40000, rng)
        expected = math.sqrt(np.sum(1.0 - z ** 2)) / len(z) / math.sqrt(40000)
        self.assertAlmostEqual(err / expected, 1.0, delta=0.05)
        self.assertLess(abs(mean), 5 * err)

    def test_two_shots(self):
        """A standard error needs two shots."""
        rng = np.random.default_rng(0)
        self.assertRaises(FloquetError, shot_estimate, [0.0], 1, rng)

    def test_readout_rescale(self):
        """Readout flips shrink <Z> by 1 - 2p."""
        np.testing.assert_allclose(readout_rescale([1.0, -0.5], 0.1),
                                   [0.8, -0.4])


class TestTrajectories(unittest.TestCase):
    """Test the Pauli-trajectory emulation."""
    def test_noiseless_matches_statevector(self):
        """No gate noise means one exact trajectory."""
        graph = build_chain(5)
        pattern = make_pattern(graph, PatternKind.DomainWall)
        params = FloquetParams(0.8 * math.pi, 0.3)
        model = NoiseModel(0.0, 0.0, 0.1)
        result = run_noisy(pattern, params, graph, model, 6, n_shots=None,
                           n_trajectories=50)
        exact = evolve_z(pattern, params, graph, 6).mean(axis=1)
        np.testing.assert_allclose(result.values, 0.8 * exact, atol=1e-12)
        np.testing.assert_array_equal(result.stderrs, np.zeros(7))
        self.assertEqual(result.per_qubit.shape, (7, 5))
        self.assertEqual(result.channel, Channel.Raw)

    def test_fully_depolarized_pair(self):
        """An almost certain two-qubit error leaves <Z> = -1/15."""
        graph = load_coupling_map('0 1')
        pattern = make_pattern(graph, PatternKind.Polarized)
        model = NoiseModel(1.0 - 1e-12, 0.0, 0.0)
        result = run_noisy(pattern, FloquetParams(0.0, 0.0), graph, model, 1,
                           n_shots=None, n_trajectories=3000, seed=4)
        self.assertEqual(result.values[0], 1.0)
        self.assertGreater(result.stderrs[1], 0.0)
        self.assertLess(abs(result.values[1] + 1.0 / 15.0),
                        5 * result.stderrs[1])

    def test_matches_kraus_oracle(self):
        """Trajectory averages are unbiased against the exact channel."""
        graph = build_chain(3)
        pattern = make_pattern(graph, PatternKind.Explicit, [0, 1, 0])
        params = FloquetParams(0.6 * math.pi, 0.2 * math.pi)
        model = NoiseModel(0.05, 0.02, 0.0)
        result = run_noisy(pattern, params, graph, model, 2, n_shots=None,
                           n_trajectories=2000, seed=9)
        program = floquet_cycle(params, graph)
        for step in (1, 2):
            rho = depolarized_density(pattern.bits, program, step, 0.02, 0.05)
            exact = np.mean([np.trace(rho @ z_operator(q, 3)).real
                             for q in range(3)])
            self.assertLess(abs(result.values[step] - exact),
                            5 * result.stderrs[step] + 1e-12)

    def test_cz_schedule(self):
        """R_ZZ(-pi/2) is noised as two Sdg and one CZ."""
        graph = build_chain(2)
        model = NoiseModel(0.01, 0.001, 0.0)
        schedule = noise_schedule(
            floquet_cycle(FloquetParams(0.3, 0.2), graph), model)
        names = [op.operation if isinstance(op.operation, str)
                 else op.operation.kind.name for op in schedule]
        self.assertEqual(names, ['RX', 'RX', 'Sdg', 'Sdg', 'CZ', 'RZ', 'RZ'])
        first, second = graph.edges[0]
        self.assertEqual([op.targets for op in schedule[2:5]],
                         [(first,), (second,), (first, second)])
        self.assertEqual([op.probability for op in schedule],
                         [0.001] * 4 + [0.01] + [0.001] * 2)

    def test_schedule_without_cz_form(self):
        """Other coupling angles keep one noisy R_ZZ."""
        graph = build_chain(2)
        model = NoiseModel(0.01, 0.001, 0.0)
        schedule = noise_schedule(
            floquet_cycle(FloquetParams(0.3, 0.2, -1.0), graph), model)
        self.assertEqual([op.operation.kind.name for op in schedule],
                         ['RX', 'RX', 'RZZ', 'RZ', 'RZ'])
        self.assertEqual(schedule[2].probability, 0.01)

    def test_local_noise_matches_kraus_oracle(self):
        """Single-qubit errors after the Sdg gates match the exact channel."""
        graph = build_chain(3)
        pattern = make_pattern(graph, PatternKind.Explicit, [0, 1, 0])
        params = FloquetParams(0.6 * math.pi, 0.2 * math.pi)
        model = NoiseModel(0.0, 0.08, 0.0)
        result = run_noisy(pattern, params, graph, model, 2, n_shots=None,
                           n_trajectories=2000, seed=3)
        program = floquet_cycle(params, graph)
        for step in (1, 2):
            rho = depolarized_density(pattern.bits, program, step, 0.08, 0.0)
            exact = np.mean([np.trace(rho @ z_operator(q, 3)).real
                             for q in range(3)])
            self.assertLess(abs(result.values[step] - exact),
                            5 * result.stderrs[step] + 1e-12)

    def test_seeding(self):
        """Same seed and point reproduce; another point does not."""
        graph = build_chain(4)
        pattern = make_pattern(graph, PatternKind.DomainWall)
        params = FloquetParams(0.9 * math.pi, 0.1)
        model = NoiseModel(0.05, 0.01, 0.02)
        first = run_noisy(pattern, params, graph, model, 4, 256, 20, seed=1)
        again = run_noisy(pattern, params, graph, model, 4, 256, 20, seed=1)
        other = run_noisy(pattern, params, graph, model, 4, 256, 20, seed=1,
                          point=1)
        np.testing.assert_array_equal(first.values, again.values)
        np.testing.assert_array_equal(first.stderrs, again.stderrs)
        self.assertFalse(np.array_equal(first.values, other.values))

    def test_measure_set(self):
        """Only the measure set enters the average."""
        graph = build_chain(4)
        pattern = make_pattern(graph, PatternKind.DomainWall)
        result = run_noisy(pattern, FloquetParams(0.0, 0.0), graph,
                           NoiseModel.noiseless(), 2, n_shots=None,
                           measure=measure_set(graph, [2, 3]))
        np.testing.assert_allclose(result.values, [-1.0, -1.0, -1.0])

    def test_arguments(self):
        """Negative steps and zero trajectories are refused."""
        graph = build_chain(2)
        pattern = make_pattern(graph, PatternKind.Polarized)
        params = FloquetParams(1.0, 0.0)
        self.assertRaises(ValueError, run_noisy, pattern, params, graph,
                          NoiseModel(), -1)
        self.assertRaises(ValueError, run_noisy, pattern, params, graph,
                          NoiseModel(), 2, None, 0)


class TestMitigation(unittest.TestCase):
    """Test the calibration-based rescaling."""
    @given(floats(0.01, 1.0), lists(floats(-1.0, 1.0), min_size=1, max_size=20))
    @settings(max_examples=100, deadline=None)
    def test_global_depolarizing_recovered(self, f, ideal):
        """Dividing by f undoes a global depolarizing rescale."""
        raw = series(contaminate(ideal, f))
        calib = series(contaminate(np.full(len(ideal), 0.5), f),
                       Channel.Calibration)
        result = mitigate(raw, calib, reference=0.5)
        np.testing.assert_allclose(result.values, ideal, atol=1e-12)
        self.assertEqual(result.channel, Channel.Mitigated)
        self.assertFalse(result.flags.any())

    def test_error_propagation(self):
        """Ratio errors add in quadrature."""
        raw = series([0.4], Channel.Raw, [0.01])
        calib = series([0.5], Channel.Calibration, [0.02])
        result = mitigate(raw, calib)
        self.assertAlmostEqual(result.values[0], 0.8)
        self.assertAlmostEqual(result.stderrs[0],
                               math.hypot(0.01 / 0.5, 0.4 * 0.02 / 0.25))

    def test_underflow(self):
        """Tiny calibration values are flagged, or raise when strict."""
        raw = series([0.1, 0.1])
        calib = series([0.5, 1e-4], Channel.Calibration)
        with self.assertLogs('floquet.noise', 'WARNING'):
            result = mitigate(raw, calib)
        self.assertAlmostEqual(result.values[0], 0.2)
        self.assertTrue(math.isnan(result.values[1]))
        self.assertTrue(math.isinf(result.stderrs[1]))
        np.testing.assert_array_equal(result.flags, [0, 1])
        self.assertRaises(CalibrationUnderflow, mitigate, raw, calib,
                          strict=True)

    def test_mismatch(self):
        """Series of different length and wrong channels are refused."""
        calib = series([0.5, 0.5], Channel.Calibration)
        self.assertRaises(GridMismatch, mitigate, series([0.1]), calib)
        self.assertRaises(FloquetError, mitigate, series([0.1]), series([0.5]))
        self.assertRaises(FloquetError, estimate_f, series([0.5]))
        self.assertRaises(ValueError, estimate_f, calib, 0.0)

    def test_estimate_f(self):
        """f is the calibration magnitude over the reference."""
        calib = series([1.0, -0.6, 0.36], Channel.Calibration)
        np.testing.assert_allclose(estimate_f(calib), [1.0, 0.6, 0.36])


class TestVolume(unittest.TestCase):
    """Test effective circuit volumes."""
    def test_volume(self):
        """f = 0.1 at p = 4e-3 is about 574.5 gates."""
        self.assertAlmostEqual(effective_volume(0.1, 4e-3), 574.5, delta=0.1)
        self.assertAlmostEqual(effective_volume((1 - 4e-3) ** 15000, 4e-3) / 15000,
                               1.0, delta=1e-6)
        self.assertRaises(ValueError, effective_volume, 1.0, 4e-3)
        self.assertRaises(ValueError, effective_volume, 0.1, 0.0)

    def test_decay_fit(self):
        """An exact exponential returns its rate."""
        f = 0.95 * 0.9 ** np.arange(20)
        fit = fit_fidelity_decay(f, 4e-3)
        self.assertAlmostEqual(fit.fidelity_per_cycle, 0.9, places=10)
        self.assertAlmostEqual(fit.stderr, 0.0, places=8)
        self.assertAlmostEqual(fit.volume_per_cycle,
                               math.log(0.9) / math.log1p(-4e-3), places=6)
        self.assertTrue(math.isnan(fit_fidelity_decay(f).volume_per_cycle))

    def test_decay_fit_skips_unusable(self):
        """Non-positive and NaN points are left out, but three are needed."""
        f = np.array([1.0, np.nan, 0.81, -0.1, 0.729 * 0.9, 0.59049])
        self.assertAlmostEqual(fit_fidelity_decay(f).fidelity_per_cycle, 0.9,
                               places=10)
        self.assertRaises(FloquetError, fit_fidelity_decay, [1.0, 0.9, np.nan])
