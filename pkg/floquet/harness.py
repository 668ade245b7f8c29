"""
Configuration-driven experiment runner.

A YAML run file names a graph, an initial pattern, a grid of drive angles
and a backend. Every grid point is simulated independently and written to
its own directory; a manifest with content hashes closes the run.
"""
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import yaml

import floquet
from floquet.analysis import MIN_RELATIVE_AMPLITUDE, N_MAX, \
        PROMINENCE_FACTOR, WINDOW, TimeSeries, classify, dft, \
        find_dtqc_peaks, peaks_text, predicted_env, with_peaks
from floquet.circuit import FloquetParams, epsilon_of
from floquet.errors import BackendGraphMismatch, CapExceeded, ConfigError, \
        FloquetError, GridMismatch, PatternError
from floquet.lattice import LatticeGraph, LatticeKind, MeasureSet, \
        PatternKind, build_chain, build_heavy_hex, device_graph, \
        device_region, make_pattern, measure_set, read_coupling_map, \
        subgraph
from floquet.mps import mps_cycle, mps_init_product, mps_z_expectations
from floquet.noise import DEFAULT_SHOTS, DEFAULT_TRAJECTORIES, \
        UNDERFLOW_FLOOR, Channel, NoiseModel, mitigate, run_noisy
from floquet.statevector import DEFAULT_QUBIT_CAP, evolve_z
from floquet.tns import EXPECTATION_GAUGE_TOL, MAX_SWEEPS, REGAUGE_TOL, \
        RegaugePolicy, regauge_log_rows, tns_cycle, tns_init_product, \
        tns_z_expectations

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

SERIES_COLUMNS = ['step', 'raw_mean', 'raw_stderr', 'calib_mean',
                  'calib_stderr', 'mitigated', 'mitigated_err', 'flag']
SNAPSHOT_COLUMNS = ['qubit', 'x', 'y', 'z_expectation']
REGAUGE_COLUMNS = ['step', 'sweep', 'c_value']
ENVELOPE_COLUMNS = ['point', 'theta_x', 'theta_z', 'epsilon', 'omega_main',
                    'omega_plus', 'omega_minus', 'omega_env', 'a_side',
                    'predicted_env', 'classification']

COLUMNS_TEXT = """\
# Column description of a run directory. Angles are in radians,
# frequencies in units of the drive frequency (omega T / 2 pi).
point_NNN/series.csv: step, raw_mean, raw_stderr, calib_mean, calib_stderr, mitigated, mitigated_err, flag
  averaged magnetisation per step; calib_* is the theta_x = pi run (nan when
  noise is off); flag = 1 marks a calibration underflow.
point_NNN/spectrum.csv: k, omega_over_2pi, amplitude[, amplitude_err]
  DFT of the mitigated column.
point_NNN/peaks.txt: key value lines for omega_main, a_main, omega_plus, a_plus, omega_minus, a_minus, omega_env, a_side
point_NNN/snapshot_step_SSS.csv: qubit, x, y, z_expectation
point_NNN/regauge.csv: step, sweep, c_value (tensor-network runs only)
envelope.csv: point, theta_x, theta_z, epsilon, omega_main, omega_plus, omega_minus, omega_env, a_side, predicted_env, classification
"""


class GraphSource(IntEnum):
    """Where a run's graph comes from."""
    HeavyHex = 0
    Chain = 1
    Device = 2
    DeviceRegion = 3
    CouplingMap = 4


class Backend(IntEnum):
    """Simulation engines."""
    Sv = 0
    Mps = 1
    Tns = 2


_GRAPH_SOURCES = {'heavy_hex': GraphSource.HeavyHex, 'chain': GraphSource.Chain,
                  'device': GraphSource.Device,
                  'device_region': GraphSource.DeviceRegion,
                  'coupling_map': GraphSource.CouplingMap}
_PATTERNS = {'stripe': PatternKind.Stripe, 'domain_wall': PatternKind.DomainWall,
             'polarized': PatternKind.Polarized,
             'explicit': PatternKind.Explicit}
_BACKENDS = {'sv': Backend.Sv, 'mps': Backend.Mps, 'tns': Backend.Tns}
_POLICIES = {'every_step': RegaugePolicy.EveryStep,
             'before_measurement': RegaugePolicy.BeforeMeasurement}

_TOP_KEYS = {'schema_version', 'name', 'graph', 'pattern', 'params', 'backend',
             'noise', 'n_steps', 'measure', 'snapshots', 'analysis', 'seed',
             'output', 'workers'}
# Keys that do not change results and stay out of the config hash.
_UNHASHED_KEYS = {'output', 'workers'}


@dataclass(frozen=True)
class GraphSpec():
    """How to build the graph of a run."""
    source: GraphSource
    rows: int = 1
    cols: int = 1
    length: int = 2
    path: Optional[str] = None
    vertices: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class BackendOptions():
    kind: Backend = Backend.Sv
    chi: Optional[int] = None
    regauge: RegaugePolicy = RegaugePolicy.EveryStep
    regauge_tol: float = REGAUGE_TOL
    max_sweeps: int = MAX_SWEEPS
    expectation_tol: float = EXPECTATION_GAUGE_TOL
    qubit_cap: int = DEFAULT_QUBIT_CAP


@dataclass(frozen=True)
class NoiseOptions():
    enabled: bool = False
    model: NoiseModel = field(default_factory=NoiseModel)
    shots: Optional[int] = DEFAULT_SHOTS
    trajectories: int = DEFAULT_TRAJECTORIES
    underflow_floor: float = UNDERFLOW_FLOOR


@dataclass(frozen=True)
class AnalysisOptions():
    n_max: Optional[int] = N_MAX
    window: float = WINDOW
    prominence_factor: float = PROMINENCE_FACTOR
    min_relative_amplitude: float = MIN_RELATIVE_AMPLITUDE


@dataclass(frozen=True)
class RunConfig():
    """A validated run file. Angles are stored in radians."""
    name: str
    graph: GraphSpec
    pattern: PatternKind
    theta_x: Tuple[float, ...]
    theta_z: Tuple[float, ...]
    theta_j: float = -math.pi / 2
    pattern_bits: Optional[str] = None
    backend: BackendOptions = field(default_factory=BackendOptions)
    noise: NoiseOptions = field(default_factory=NoiseOptions)
    n_steps: int = 100
    measure: Optional[Tuple[int, ...]] = None
    snapshots: Tuple[int, ...] = ()
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    seed: int = 0
    output: str = 'runs'
    workers: int = 1
    digest: str = ''

    def __post_init__(self):
        if not self.theta_x or not self.theta_z:
            raise ConfigError('the parameter grid is empty')
        if self.n_steps < 1:
            raise ConfigError('n_steps must be positive')
        if any(not 0 <= s <= self.n_steps for s in self.snapshots):
            raise ConfigError('snapshot steps must lie in [0, n_steps]')
        if self.workers < 1:
            raise ConfigError('workers must be positive')
        n_max = self.analysis.n_max
        if n_max is not None and n_max > self.n_steps + 1:
            raise ConfigError('analysis.n_max = {} needs n_steps >= {}'.format(
                n_max, n_max - 1))
        if self.noise.enabled and self.backend.kind != Backend.Sv:
            raise ConfigError('noise emulation runs on the sv backend only')

    def grid(self) -> List[Tuple[int, FloquetParams]]:
        """Grid points, theta_x outermost."""
        points = []
        for theta_x in self.theta_x:
            for theta_z in self.theta_z:
                points.append((len(points),
                               FloquetParams(theta_x, theta_z, self.theta_j)))
        return points


def _choice(mapping, value, what):
    try:
        return mapping[str(value).lower()]
    except KeyError:
        raise ConfigError('unknown {} {!r}; expected one of {}'.format(
            what, value, ', '.join(sorted(mapping)))) from None


def _section(data, key, allowed):
    section = data.get(key) or {}
    if not isinstance(section, dict):
        raise ConfigError('{} must be a mapping'.format(key))
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError('unknown {} keys: {}'.format(
            key, ', '.join(sorted(unknown))))
    return section


def _angles(value, what):
    values = value if isinstance(value, (list, tuple)) else [value]
    try:
        return tuple(float(v) * math.pi for v in values)
    except (TypeError, ValueError):
        raise ConfigError('{} must be numbers in units of pi'.format(what)) \
            from None


def config_digest(data: dict) -> str:
    """sha256 of the canonical JSON form of the result-relevant keys."""
    hashed = {k: v for k, v in data.items() if k not in _UNHASHED_KEYS}
    canonical = json.dumps(hashed, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def config_from_dict(data: dict, base_dir: Union[str, Path] = '.') -> RunConfig:
    """Validate a parsed run file."""
    if not isinstance(data, dict):
        raise ConfigError('a run file is a mapping')
    try:
        return _parse_config(data, base_dir)
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from None


def _parse_config(data, base_dir):
    if data.get('schema_version') != SCHEMA_VERSION:
        raise ConfigError('schema_version must be {}'.format(SCHEMA_VERSION))
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError('unknown keys: {}'.format(', '.join(sorted(unknown))))
    base_dir = Path(base_dir)

    graph = _section(data, 'graph', {'kind', 'rows', 'cols', 'length', 'path',
                                     'vertices'})
    source = _choice(_GRAPH_SOURCES, graph.get('kind', 'heavy_hex'), 'graph kind')
    path = graph.get('path')
    if source == GraphSource.CouplingMap:
        if path is None:
            raise ConfigError('a coupling_map graph needs a path')
        path = str(base_dir / path)
    vertices = graph.get('vertices')
    graph_spec = GraphSpec(
        source, int(graph.get('rows', 1)), int(graph.get('cols', 1)),
        int(graph.get('length', 2)), path,
        tuple(int(v) for v in vertices) if vertices is not None else None)

    pattern = _section(data, 'pattern', {'kind', 'bits', 'path'})
    pattern_kind = _choice(_PATTERNS, pattern.get('kind', 'polarized'),
                           'pattern kind')
    bits = pattern.get('bits')
    if pattern.get('path') is not None:
        lines = [line.strip() for line in (base_dir / pattern['path'])
                 .read_text(encoding='utf-8').splitlines()
                 if line.strip() and not line.lstrip().startswith('#')]
        bits = lines[0] if lines else ''
    if bits is not None:
        bits = str(bits)

    params = _section(data, 'params', {'theta_j', 'theta_x', 'theta_z'})
    if 'theta_x' not in params or 'theta_z' not in params:
        raise ConfigError('params needs theta_x and theta_z')
    theta_j = _angles(params.get('theta_j', -0.5), 'theta_j')
    if len(theta_j) != 1:
        raise ConfigError('theta_j is a single value')

    backend = _section(data, 'backend', {'name', 'chi', 'regauge', 'regauge_tol',
                                         'max_sweeps', 'expectation_tol',
                                         'qubit_cap'})
    chi = backend.get('chi')
    backend_options = BackendOptions(
        _choice(_BACKENDS, backend.get('name', 'sv'), 'backend'),
        int(chi) if chi is not None else None,
        _choice(_POLICIES, backend.get('regauge', 'every_step'),
                'regauge policy'),
        float(backend.get('regauge_tol', REGAUGE_TOL)),
        int(backend.get('max_sweeps', MAX_SWEEPS)),
        float(backend.get('expectation_tol', EXPECTATION_GAUGE_TOL)),
        int(backend.get('qubit_cap', DEFAULT_QUBIT_CAP)))

    noise = _section(data, 'noise', {'enabled', 'p_two_qubit', 'p_single_qubit',
                                     'p_readout', 'shots', 'trajectories',
                                     'underflow_floor'})
    defaults = NoiseModel()
    shots = noise.get('shots', DEFAULT_SHOTS)
    noise_options = NoiseOptions(
        bool(noise.get('enabled', False)),
        NoiseModel(float(noise.get('p_two_qubit', defaults.p_two_qubit)),
                   float(noise.get('p_single_qubit', defaults.p_single_qubit)),
                   float(noise.get('p_readout', defaults.p_readout))),
        int(shots) if shots is not None else None,
        int(noise.get('trajectories', DEFAULT_TRAJECTORIES)),
        float(noise.get('underflow_floor', UNDERFLOW_FLOOR)))

    analysis = _section(data, 'analysis', {'n_max', 'window',
                                           'prominence_factor',
                                           'min_relative_amplitude'})
    n_max = analysis.get('n_max', N_MAX)
    analysis_options = AnalysisOptions(
        int(n_max) if n_max is not None else None,
        float(analysis.get('window', WINDOW)),
        float(analysis.get('prominence_factor', PROMINENCE_FACTOR)),
        float(analysis.get('min_relative_amplitude',
                           MIN_RELATIVE_AMPLITUDE)))

    measure = data.get('measure')
    name = str(data.get('name', 'run'))
    return RunConfig(
        name=name, graph=graph_spec, pattern=pattern_kind,
        theta_x=_angles(params['theta_x'], 'theta_x'),
        theta_z=_angles(params['theta_z'], 'theta_z'), theta_j=theta_j[0],
        pattern_bits=bits, backend=backend_options, noise=noise_options,
        n_steps=int(data.get('n_steps', 100)),
        measure=tuple(int(q) for q in measure) if measure is not None else None,
        snapshots=tuple(int(s) for s in data.get('snapshots') or ()),
        analysis=analysis_options, seed=int(data.get('seed', 0)),
        output=str(data.get('output', Path('runs') / name)),
        workers=int(data.get('workers', 1)), digest=config_digest(data))


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a YAML run file."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding='utf-8'))
    except yaml.YAMLError as err:
        raise ConfigError('{}: {}'.format(path, err)) from None
    return config_from_dict(data, path.parent)


def build_graph(spec: GraphSpec) -> LatticeGraph:
    if spec.source == GraphSource.HeavyHex:
        graph = build_heavy_hex(spec.rows, spec.cols)
    elif spec.source == GraphSource.Chain:
        graph = build_chain(spec.length)
    elif spec.source == GraphSource.Device:
        graph = device_graph()
    elif spec.source == GraphSource.DeviceRegion:
        graph, _ = device_region()
    else:
        graph = read_coupling_map(spec.path)
    if spec.vertices is not None:
        graph, _ = subgraph(graph, spec.vertices)
    return graph


def prepare(config: RunConfig):
    """Graph, initial pattern and measure set of a run, checked for fit."""
    graph = build_graph(config.graph)
    bits = None
    if config.pattern == PatternKind.Explicit:
        if config.pattern_bits is None:
            raise ConfigError('an explicit pattern needs bits or a path')
        if set(config.pattern_bits) - {'0', '1'}:
            raise PatternError('pattern bits must be 0 or 1')
        bits = [int(c) for c in config.pattern_bits]
    pattern = make_pattern(graph, config.pattern, bits)
    measure = measure_set(graph, config.measure)

    kind = config.backend.kind
    if kind == Backend.Mps and graph.kind != LatticeKind.Chain:
        raise BackendGraphMismatch(
            'the mps backend needs a chain graph, got {}'.format(graph.kind.name))
    if kind == Backend.Sv and graph.num_qubits > config.backend.qubit_cap:
        raise CapExceeded('{} qubits exceed the state-vector cap of {}'.format(
            graph.num_qubits, config.backend.qubit_cap))
    if config.noise.enabled and config.noise.model.p_readout >= 0.5:
        raise ConfigError('p_readout must stay below 0.5 for mitigation')
    return graph, pattern, measure


@dataclass(eq=False)
class PointResult():
    """Everything one grid point produces."""
    index: int
    params: FloquetParams
    series: Optional[pd.DataFrame] = None
    per_qubit: Optional[np.ndarray] = None
    regauge_rows: List[Tuple[int, int, float]] = field(default_factory=list)
    spectrum: Optional[pd.DataFrame] = None
    peaks: Optional[str] = None
    envelope: Optional[dict] = None
    error: Optional[str] = None


def _noiseless_frame(values):
    steps = len(values)
    return pd.DataFrame({
        'step': np.arange(steps), 'raw_mean': values,
        'raw_stderr': np.zeros(steps), 'calib_mean': np.full(steps, np.nan),
        'calib_stderr': np.full(steps, np.nan), 'mitigated': values,
        'mitigated_err': np.zeros(steps), 'flag': np.zeros(steps, dtype=int),
    }, columns=SERIES_COLUMNS)


def _simulate(config, graph, pattern, measure, index, params):
    backend = config.backend
    regauge_rows = []
    if config.noise.enabled:
        noise = config.noise
        reference = abs(float(np.mean(pattern.magnetisation()[list(measure.qubits)])))
        if reference == 0.0:
            raise ConfigError('the measure set starts at zero magnetisation; '
                              'calibration cannot be normalised')
        run_args = dict(model=noise.model, n_steps=config.n_steps,
                        n_shots=noise.shots, n_trajectories=noise.trajectories,
                        seed=config.seed, measure=measure, point=index,
                        cap=backend.qubit_cap)
        raw = run_noisy(pattern, params, graph, channel=Channel.Raw, **run_args)
        trivial = FloquetParams(math.pi, params.theta_z, params.theta_j)
        calib = run_noisy(pattern, trivial, graph, channel=Channel.Calibration,
                          **run_args)
        mitigated = mitigate(raw, calib, reference, noise.underflow_floor)
        frame = pd.DataFrame({
            'step': np.arange(len(raw)), 'raw_mean': raw.values,
            'raw_stderr': raw.stderrs, 'calib_mean': calib.values,
            'calib_stderr': calib.stderrs, 'mitigated': mitigated.values,
            'mitigated_err': mitigated.stderrs, 'flag': mitigated.flags,
        }, columns=SERIES_COLUMNS)
        return frame, raw.per_qubit, regauge_rows

    if backend.kind == Backend.Sv:
        per_qubit = evolve_z(pattern, params, graph, config.n_steps,
                             backend.qubit_cap)
    elif backend.kind == Backend.Mps:
        state = mps_init_product(pattern, backend.chi)
        rows = [mps_z_expectations(state)]
        for _ in range(config.n_steps):
            mps_cycle(state, params, graph)
            rows.append(mps_z_expectations(state))
        per_qubit = np.array(rows)
        logger.info('point %d: mps truncation weight %.3e', index,
                    state.cum_truncation)
    else:
        state = tns_init_product(pattern, graph, backend.chi)
        rows = [tns_z_expectations(state, backend.expectation_tol)]
        for step in range(1, config.n_steps + 1):
            tns_cycle(state, params, graph, backend.regauge,
                      backend.regauge_tol, backend.max_sweeps)
            regauge_rows += regauge_log_rows(step, state.reports)
            state.reports.clear()
            rows.append(tns_z_expectations(state, backend.expectation_tol))
        per_qubit = np.array(rows)
        logger.info('point %d: tns truncation weight %.3e', index,
                    state.cum_truncation)
    values = per_qubit[:, list(measure.qubits)].mean(axis=1)
    return _noiseless_frame(values), per_qubit, regauge_rows


def run_point(config: RunConfig, index: int,
              params: FloquetParams) -> PointResult:
    """Simulate and analyse one grid point; failures are captured."""
    result = PointResult(index, params)
    try:
        graph, pattern, measure = prepare(config)
        frame, per_qubit, regauge_rows = _simulate(
            config, graph, pattern, measure, index, params)
        result.series, result.per_qubit = frame, per_qubit
        result.regauge_rows = regauge_rows
        envelope = {'point': index, 'theta_x': params.theta_x,
                    'theta_z': params.theta_z, 'epsilon': epsilon_of(params),
                    'predicted_env': predicted_env(params)
                    if params.theta_j != 0.0 else np.nan}
        options = config.analysis
        usable = np.all(np.isfinite(frame['mitigated'].to_numpy()[:options.n_max])) \
            if options.n_max is not None else False
        if options.n_max is not None and not usable:
            logger.warning('point %d: flagged steps in the series, no spectrum',
                           index)
        if usable:
            errors = frame['mitigated_err'].to_numpy() \
                if config.noise.enabled else None
            spec = dft(TimeSeries(frame['mitigated'].to_numpy(), errors),
                       options.n_max)
            peaks = find_dtqc_peaks(spec, options.window,
                                    options.prominence_factor,
                                    options.min_relative_amplitude)
            spec = with_peaks(spec, peaks)
            result.spectrum = spec.to_frame()
            result.peaks = peaks_text(peaks)
            envelope.update({
                'omega_main': peaks.main[0],
                'omega_plus': peaks.side_plus[0] if peaks.has_sides else np.nan,
                'omega_minus': peaks.side_minus[0] if peaks.has_sides else np.nan,
                'omega_env': peaks.omega_env if peaks.has_sides else np.nan,
                'a_side': peaks.a_side if peaks.has_sides else np.nan,
                'classification': classify(peaks, options.n_max)})
        result.envelope = envelope
    except (FloquetError, np.linalg.LinAlgError) as err:
        logger.error('point %d failed: %s', index, err)
        result.error = '{}: {}'.format(type(err).__name__, err)
    return result


def _write_csv(frame, path):
    frame.to_csv(path, index=False, na_rep='nan', lineterminator='\n')


def write_point(config: RunConfig, graph: LatticeGraph, measure: MeasureSet,
                result: PointResult, directory: Path):
    """Write one point's files into directory."""
    directory.mkdir(parents=True, exist_ok=True)
    params = result.params
    lines = ['theta_x {!r}'.format(params.theta_x),
             'theta_z {!r}'.format(params.theta_z),
             'theta_j {!r}'.format(params.theta_j),
             'epsilon {!r}'.format(params.epsilon),
             'backend {}'.format(config.backend.kind.name.lower()),
             'chi {}'.format(config.backend.chi),
             'graph {} {}'.format(graph.name, graph.num_qubits),
             'measure {}'.format(' '.join(map(str, measure.qubits)))]
    (directory / 'params.txt').write_text('\n'.join(lines) + '\n',
                                          encoding='utf-8')
    if result.series is None:
        return
    _write_csv(result.series, directory / 'series.csv')
    if result.spectrum is not None:
        _write_csv(result.spectrum, directory / 'spectrum.csv')
        (directory / 'peaks.txt').write_text(result.peaks, encoding='utf-8')
    for step in config.snapshots:
        coords = graph.coords or [(np.nan, np.nan)] * graph.num_qubits
        snapshot = pd.DataFrame({
            'qubit': np.arange(graph.num_qubits),
            'x': [x for x, _ in coords], 'y': [y for _, y in coords],
            'z_expectation': result.per_qubit[step]}, columns=SNAPSHOT_COLUMNS)
        _write_csv(snapshot, directory / 'snapshot_step_{:03d}.csv'.format(step))
    if config.backend.kind == Backend.Tns:
        _write_csv(pd.DataFrame(result.regauge_rows, columns=REGAUGE_COLUMNS),
                   directory / 'regauge.csv')


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(config: RunConfig, output: Optional[Union[str, Path]] = None) -> Path:
    """
    Run every grid point and write the run directory.

    Returns the directory. Points that fail are listed in the manifest
    under 'failed' and do not stop the others.
    """
    graph, _, measure = prepare(config)
    root = Path(output if output is not None else config.output)
    root.mkdir(parents=True, exist_ok=True)
    points = config.grid()
    logger.info('%s: %d grid points on %s (%d qubits), backend %s',
                config.name, len(points), graph.name, graph.num_qubits,
                config.backend.kind.name)

    if config.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(run_point, config, index, params)
                       for index, params in points]
            results = [future.result() for future in futures]
    else:
        results = [run_point(config, index, params) for index, params in points]

    envelope_rows = []
    failed = []
    for result in results:
        write_point(config, graph, measure, result,
                    root / 'point_{:03d}'.format(result.index))
        if result.error is not None:
            failed.append({'point': result.index, 'error': result.error})
        elif result.envelope is not None:
            envelope_rows.append(result.envelope)
    if config.analysis.n_max is not None:
        _write_csv(pd.DataFrame(envelope_rows, columns=ENVELOPE_COLUMNS),
                   root / 'envelope.csv')
    (root / 'columns.txt').write_text(COLUMNS_TEXT, encoding='utf-8')

    files = {}
    for path in sorted(root.rglob('*')):
        if path.is_file() and path.name != 'manifest.json':
            files[path.relative_to(root).as_posix()] = file_sha256(path)
    manifest = {'schema_version': SCHEMA_VERSION, 'name': config.name,
                'config_sha256': config.digest, 'seed': config.seed,
                'version': floquet.__version__,
                'backend': config.backend.kind.name.lower(),
                'points': len(points), 'failed': failed, 'files': files}
    (root / 'manifest.json').write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    if failed:
        logger.warning('%d of %d points failed', len(failed), len(points))
    return root


@dataclass(frozen=True)
class CompareReport():
    """Per-point and overall differences of the mitigated series."""
    per_point: Tuple[Tuple[int, float, float], ...]
    max_diff: float
    mean_diff: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_diff <= self.tol

    def text(self) -> str:
        lines = ['point max_diff mean_diff']
        lines += ['{} {:.6e} {:.6e}'.format(*row) for row in self.per_point]
        lines.append('max {:.6e} mean {:.6e} tol {:.1e} {}'.format(
            self.max_diff, self.mean_diff, self.tol,
            'PASS' if self.passed else 'FAIL'))
        return '\n'.join(lines) + '\n'


def _measure_line(directory):
    for line in (directory / 'params.txt').read_text(encoding='utf-8').splitlines():
        if line.startswith('measure '):
            return line
    return None


def compare(run_a: Union[str, Path], run_b: Union[str, Path],
            tol: float = 1e-8) -> CompareReport:
    """Step-wise absolute differences of the mitigated column of two runs."""
    run_a, run_b = Path(run_a), Path(run_b)
    points_a = sorted(p.name for p in run_a.glob('point_*')
                      if (p / 'series.csv').exists())
    points_b = sorted(p.name for p in run_b.glob('point_*')
                      if (p / 'series.csv').exists())
    if not points_a or points_a != points_b:
        raise GridMismatch('runs cover different grid points')
    per_point, diffs = [], []
    for name in points_a:
        if _measure_line(run_a / name) != _measure_line(run_b / name):
            raise GridMismatch('{}: measure sets differ'.format(name))
        a = pd.read_csv(run_a / name / 'series.csv')
        b = pd.read_csv(run_b / name / 'series.csv')
        if not np.array_equal(a['step'].to_numpy(), b['step'].to_numpy()):
            raise GridMismatch('{}: step grids differ'.format(name))
        values_a, values_b = a['mitigated'].to_numpy(), b['mitigated'].to_numpy()
        diff = np.abs(values_a - values_b)
        # Matching underflow steps agree; a NaN on one side only does not.
        both = np.isnan(values_a) & np.isnan(values_b)
        diff = np.where(both, 0.0, np.where(np.isnan(diff), np.inf, diff))
        per_point.append((int(name.split('_')[1]), float(diff.max()),
                          float(diff.mean())))
        diffs.append(diff)
    everything = np.concatenate(diffs)
    return CompareReport(tuple(per_point), float(everything.max()),
                         float(everything.mean()), tol)


def spectrum_of_csv(path: Union[str, Path], n_max: int = N_MAX,
                    column: str = 'mitigated'):
    """Spectrum and peaks of one column of a series file."""
    frame = pd.read_csv(path)
    if column not in frame:
        raise ConfigError('{} has no column {!r}'.format(path, column))
    error_column = {'mitigated': 'mitigated_err', 'raw_mean': 'raw_stderr',
                    'calib_mean': 'calib_stderr'}.get(column)
    errors = None
    if error_column in frame and np.all(np.isfinite(frame[error_column])):
        errors = frame[error_column].to_numpy()
    spec = dft(TimeSeries(frame[column].to_numpy(), errors), n_max)
    peaks = find_dtqc_peaks(spec)
    return with_peaks(spec, peaks), peaks
