"""
Depolarizing-noise emulation on the state-vector engine, shot estimators and
the calibration-based error mitigation.

Under a global depolarizing model a traceless observable is only rescaled,
<O>_noisy = f <O>, so dividing by f recovers the ideal value. f is estimated
from the trivial theta_x = pi circuit, whose ideal magnetisation is known.
"""
import logging
import math
from collections import namedtuple
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np
import statsmodels.api as sm
from scipy import stats

from floquet.circuit import LOCAL_GATES, FloquetParams, Gate, GateKind, \
        GateProgram, floquet_cycle, rzz_cz_decomposition
from floquet.errors import CalibrationUnderflow, FloquetError, \
        GridMismatch, UnsupportedAngle
from floquet.lattice import InitialPattern, LatticeGraph, MeasureSet, \
        measure_set
from floquet.statevector import DEFAULT_QUBIT_CAP, apply_cz, apply_gate, \
        apply_matrix, apply_pauli, init_product, z_expectations

logger = logging.getLogger(__name__)

DEFAULT_SHOTS = 2 ** 14
DEFAULT_TRAJECTORIES = 100
UNDERFLOW_FLOOR = 1e-3
SHOT_STREAM = 2 ** 31 - 1

PAULI_LABELS = 'IXYZ'


class Channel(IntEnum):
    """What an estimated series measures."""
    Raw = 0
    Calibration = 1
    Mitigated = 2


@dataclass(frozen=True)
class NoiseModel():
    """Per-gate depolarizing and readout-flip probabilities."""
    p_two_qubit: float = 4e-3
    p_single_qubit: float = 4e-4
    p_readout: float = 1.7e-2

    def __post_init__(self):
        for name in ('p_two_qubit', 'p_single_qubit', 'p_readout'):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError('{} must lie in [0, 1)'.format(name))

    @property
    def gate_noise_free(self) -> bool:
        return self.p_two_qubit == 0.0 and self.p_single_qubit == 0.0

    @classmethod
    def noiseless(cls):
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True, eq=False)
class EstimatedSeries():
    """
    Per-step estimates of the averaged magnetisation.

    flags marks steps whose value is not a usable estimate (calibration
    underflow). per_qubit holds the trajectory-averaged <Z_j> of every qubit
    when the series came from a simulation.
    """
    values: np.ndarray
    stderrs: np.ndarray
    n_shots: Optional[int]
    channel: Channel
    flags: np.ndarray = None
    per_qubit: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        stderrs = np.asarray(self.stderrs, dtype=float)
        flags = np.zeros(len(values), dtype=int) if self.flags is None \
            else np.asarray(self.flags, dtype=int)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'stderrs', stderrs)
        object.__setattr__(self, 'flags', flags)
        if values.shape != stderrs.shape or values.shape != flags.shape \
                or values.ndim != 1:
            raise ValueError('values, stderrs and flags must be equal-length '
                             'vectors')
        if np.any(stderrs < 0.0):
            raise ValueError('standard errors must be non-negative')
        if self.channel != Channel.Mitigated \
                and np.any(np.abs(values) > 1.0 + 1e-12):
            raise ValueError('raw and calibration values lie in [-1, 1]')

    def __len__(self):
        return len(self.values)


def readout_rescale(z, p_readout: float):
    """<Z> seen through independent readout flips with probability p."""
    return (1.0 - 2.0 * p_readout) * np.asarray(z)


def contaminate(values, f):
    """Global depolarizing data for a traceless observable: f times ideal."""
    return np.asarray(f) * np.asarray(values)


def shot_estimate(z_per_qubit, n_shots: int, rng, p_readout: float = 0.0):
    """
    Mean and standard error of the averaged magnetisation from n_shots shots.

    Each shot draws every qubit of the measure set from its <Z_j>, flips it
    with probability p_readout and averages the +-1 outcomes. Qubits are drawn
    independently from their marginals: the mean is exact, but the standard
    error leaves out correlations between qubits. Bitstrings from a single
    state are what statevector.sample_bits gives.
    """
    if n_shots < 2:
        raise FloquetError('need at least two shots for a standard error')
    z = np.clip(np.asarray(z_per_qubit, dtype=float), -1.0, 1.0)
    p_one = (1.0 - z) / 2.0
    p_one = p_one * (1.0 - p_readout) + (1.0 - p_one) * p_readout
    bits = rng.random((n_shots, len(z))) < p_one[None, :]
    samples = (1.0 - 2.0 * bits).mean(axis=1)
    return float(np.mean(samples)), float(stats.sem(samples))


NoisyOp = namedtuple('NoisyOp', ['operation', 'targets', 'probability'])


def noise_schedule(program: GateProgram, model: NoiseModel):
    """
    The program as native operations, each followed by a depolarizing error
    with the given probability.

    An RZZ with a CZ form runs as its local gates (p_single_qubit each) and
    the CZ (p_two_qubit); the global phase is dropped. Any other RZZ stays one
    two-qubit operation with p_two_qubit.
    """
    schedule = []
    for gate in program:
        if gate.kind != GateKind.RZZ:
            schedule.append(NoisyOp(gate, gate.targets, model.p_single_qubit))
            continue
        try:
            decomposition = rzz_cz_decomposition(gate.angle)
        except UnsupportedAngle:
            schedule.append(NoisyOp(gate, gate.targets, model.p_two_qubit))
            continue
        schedule += [NoisyOp(name, (qubit,), model.p_single_qubit)
                     for name, qubit in zip(decomposition.locals, gate.targets)]
        schedule.append(NoisyOp(decomposition.two_qubit, gate.targets,
                                model.p_two_qubit))
    return schedule


def _apply_native(state, op):
    if isinstance(op.operation, Gate):
        apply_gate(state, op.operation)
    elif op.operation == 'CZ':
        apply_cz(state, *op.targets)
    else:
        apply_matrix(state, LOCAL_GATES[op.operation], op.targets[0])


def _depolarize(state, targets, probability, rng):
    if probability == 0.0 or rng.random() >= probability:
        return
    if len(targets) == 2:
        index = int(rng.integers(1, 16))
        labels = (PAULI_LABELS[index // 4], PAULI_LABELS[index % 4])
        for qubit, label in zip(targets, labels):
            apply_pauli(state, qubit, label)
    else:
        apply_pauli(state, targets[0], PAULI_LABELS[int(rng.integers(1, 4))])


def trajectory_z(pattern, schedule, n_steps, rng, cap=DEFAULT_QUBIT_CAP):
    """<Z_j> of one Pauli trajectory after 0..n_steps cycles."""
    state = init_product(pattern, cap)
    rows = [z_expectations(state)]
    for _ in range(n_steps):
        for op in schedule:
            _apply_native(state, op)
            _depolarize(state, op.targets, op.probability, rng)
        rows.append(z_expectations(state))
    return np.array(rows)


def run_noisy(pattern: InitialPattern, params: FloquetParams,
              graph: LatticeGraph, model: NoiseModel, n_steps: int,
              n_shots: Optional[int] = DEFAULT_SHOTS,
              n_trajectories: int = DEFAULT_TRAJECTORIES, seed: int = 0,
              measure: Optional[MeasureSet] = None,
              channel: Channel = Channel.Raw, point: int = 0,
              cap: int = DEFAULT_QUBIT_CAP) -> EstimatedSeries:
    """
    Averaged magnetisation of a noisy circuit over steps 0..n_steps.

    Trajectory t of grid point `point` draws from the stream
    SeedSequence([seed, point, channel, t]); shot sampling draws from
    [seed, point, channel, 2**31 - 1]. With n_shots=None the estimate is the
    exact trajectory mean with the readout flips applied analytically. A
    noise-free gate model runs a single trajectory.
    """
    if n_steps < 0:
        raise ValueError('n_steps must be non-negative')
    if n_trajectories < 1:
        raise ValueError('need at least one trajectory')
    measure = measure if measure is not None else measure_set(graph)
    schedule = noise_schedule(floquet_cycle(params, graph), model)
    if model.gate_noise_free:
        n_trajectories = 1
    columns = list(measure.qubits)

    runs = []
    for trajectory in range(n_trajectories):
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, point, int(channel), trajectory]))
        runs.append(trajectory_z(pattern, schedule, n_steps, rng, cap))
    runs = np.array(runs)
    per_qubit = runs.mean(axis=0)
    averaged = runs[:, :, columns].mean(axis=2)
    if n_trajectories > 1:
        trajectory_err = stats.sem(averaged, axis=0)
    else:
        trajectory_err = np.zeros(n_steps + 1)

    if n_shots is None:
        values = readout_rescale(per_qubit[:, columns].mean(axis=1),
                                 model.p_readout)
        stderrs = np.abs(1.0 - 2.0 * model.p_readout) * trajectory_err
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, point, int(channel), SHOT_STREAM]))
        estimates = [shot_estimate(row[columns], n_shots, rng, model.p_readout)
                     for row in per_qubit]
        values = np.array([mean for mean, _ in estimates])
        stderrs = np.hypot([err for _, err in estimates],
                           (1.0 - 2.0 * model.p_readout) * trajectory_err)
    logger.debug('point %d %s: %d trajectories, %s shots', point,
                 Channel(channel).name, n_trajectories, n_shots)
    return EstimatedSeries(values, stderrs, n_shots, Channel(channel),
                           per_qubit=per_qubit)


def estimate_f(calib: EstimatedSeries, reference: float = 1.0) -> np.ndarray:
    """Per-step fidelity f_t = |calib_t| / reference."""
    if calib.channel != Channel.Calibration:
        raise FloquetError('f is estimated from a calibration series')
    if reference <= 0.0:
        raise ValueError('reference magnetisation must be positive')
    return np.abs(calib.values) / reference


def mitigate(raw: EstimatedSeries, calib: EstimatedSeries,
             reference: float = 1.0, floor: float = UNDERFLOW_FLOOR,
             strict: bool = False) -> EstimatedSeries:
    """
    Divide the raw series by the calibration fidelity.

    Errors of the two independent estimates are propagated as for a ratio.
    Steps with |calib| below floor get value NaN, infinite error and flag 1;
    with strict=True they raise CalibrationUnderflow instead.
    """
    if len(raw) != len(calib):
        raise GridMismatch('raw has {} steps, calibration {}'.format(
            len(raw), len(calib)))
    f = estimate_f(calib, reference)
    sigma_f = calib.stderrs / reference
    low = np.abs(calib.values) < floor
    if np.any(low):
        if strict:
            raise CalibrationUnderflow('|calibration| below {} at steps {}'.format(
                floor, np.flatnonzero(low).tolist()))
        logger.warning('calibration underflow at %d steps', int(np.sum(low)))
    safe_f = np.where(low, 1.0, f)
    values = raw.values / safe_f
    errors = np.sqrt((raw.stderrs / safe_f) ** 2
                     + (raw.values * sigma_f / safe_f ** 2) ** 2)
    values = np.where(low, np.nan, values)
    errors = np.where(low, np.inf, errors)
    return EstimatedSeries(values, errors, raw.n_shots, Channel.Mitigated,
                           flags=low.astype(int), per_qubit=raw.per_qubit)


def effective_volume(f: float, p: float) -> float:
    """Gate count explaining fidelity f at per-gate fidelity 1 - p."""
    if not 0.0 < f < 1.0:
        raise ValueError('f must lie in (0, 1)')
    if not 0.0 < p < 1.0:
        raise ValueError('p must lie in (0, 1)')
    return math.log(f) / math.log1p(-p)


DecayFit = namedtuple(
    'DecayFit', ['fidelity_per_cycle', 'stderr', 'volume_per_cycle', 'fit'])


def fit_fidelity_decay(f_series, p: Optional[float] = None) -> DecayFit:
    """
    Fit ln f_t = a + b t by least squares.

    Returns the per-cycle fidelity exp(b), its standard error and, given the
    per-gate error p, the effective number of gates per cycle.
    """
    f_series = np.asarray(f_series, dtype=float)
    steps = np.arange(len(f_series))
    usable = np.isfinite(f_series) & (f_series > 0.0)
    if np.count_nonzero(usable) < 3:
        raise FloquetError('need three positive fidelities to fit a decay')
    mat_x = np.column_stack((np.ones(np.count_nonzero(usable)),
                             steps[usable]))
    fit = sm.OLS(np.log(f_series[usable]), mat_x).fit()
    slope, slope_err = fit.params[1], fit.bse[1]
    per_cycle = math.exp(slope)
    volume = float('nan')
    if p is not None:
        volume = slope / math.log1p(-p)
    return DecayFit(per_cycle, per_cycle * slope_err, volume, fit)
