"""
Averaged magnetisation, its discrete Fourier spectrum and the time-crystal
peak structure read off that spectrum.

Frequencies are in units of the drive frequency, omega T / (2 pi) = k / n_max.
A period-doubled (DTC) response peaks at 0.5; a quasicrystalline (DTQC)
response adds side peaks at 0.5 -+ omega_env.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import signal

from floquet.circuit import FloquetParams, epsilon_of
from floquet.errors import FloquetError, PatternError, SeriesTooShort
from floquet.lattice import MeasureSet

logger = logging.getLogger(__name__)

N_MAX = 100
WINDOW = 0.25
PROMINENCE_FACTOR = 3.0
MIN_RELATIVE_AMPLITUDE = 1e-3

Peak = Tuple[float, float]


@dataclass(frozen=True, eq=False)
class TimeSeries():
    """One value per step 0..n-1, with optional errors."""
    values: np.ndarray
    errors: Optional[np.ndarray] = None
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError('a time series is one-dimensional')
        object.__setattr__(self, 'values', values)
        if self.errors is not None:
            errors = np.asarray(self.errors, dtype=float)
            if errors.shape != values.shape:
                raise ValueError('values and errors differ in length')
            object.__setattr__(self, 'errors', errors)

    def __len__(self):
        return len(self.values)

    @property
    def steps(self) -> np.ndarray:
        return np.arange(len(self.values))


@dataclass(frozen=True)
class Peaks():
    """Main peak, optional side peaks and the envelope they imply."""
    main: Peak
    side_plus: Optional[Peak] = None
    side_minus: Optional[Peak] = None

    @property
    def has_sides(self) -> bool:
        return self.side_plus is not None and self.side_minus is not None

    @property
    def omega_env(self) -> Optional[float]:
        """Half the side-peak separation."""
        if not self.has_sides:
            return None
        return (self.side_plus[0] - self.side_minus[0]) / 2

    @property
    def a_side(self) -> Optional[float]:
        """Summed side-peak amplitude."""
        if not self.has_sides:
            return None
        return self.side_plus[1] + self.side_minus[1]


@dataclass(frozen=True, eq=False)
class Spectrum():
    """DFT amplitudes on the k / n_max grid."""
    freqs: np.ndarray
    amps: np.ndarray
    n_max: int
    peaks: Peaks
    errors: Optional[np.ndarray] = None

    def __post_init__(self):
        if np.any(self.amps < 0.0):
            raise ValueError('amplitudes are non-negative')
        if len(self.freqs) != self.n_max or len(self.amps) != self.n_max:
            raise ValueError('spectrum needs n_max bins')

    def to_frame(self) -> pd.DataFrame:
        """Columns k, omega_over_2pi, amplitude (and amplitude_err)."""
        frame = pd.DataFrame({'k': np.arange(self.n_max),
                              'omega_over_2pi': self.freqs,
                              'amplitude': self.amps})
        if self.errors is not None:
            frame['amplitude_err'] = self.errors
        return frame


def averaged_z(per_qubit, measure: Union[MeasureSet, Iterable[int]],
               errors=None, meta: Optional[Dict[str, str]] = None):
    """
    Mean of <Z_j> over the measure set, one value per step.

    per_qubit is indexed (step, qubit). Per-qubit errors, when given, are
    treated as independent and propagated to the mean.
    """
    qubits = list(measure.qubits if isinstance(measure, MeasureSet)
                  else measure)
    if not qubits:
        raise PatternError('cannot average over an empty set of qubits')
    per_qubit = np.asarray(per_qubit, dtype=float)
    values = per_qubit[:, qubits].mean(axis=1)
    propagated = None
    if errors is not None:
        errors = np.asarray(errors, dtype=float)[:, qubits]
        propagated = np.sqrt(np.sum(errors ** 2, axis=1)) / len(qubits)
    return TimeSeries(values, propagated, dict(meta or {}))


def _main_peak(freqs, amps):
    k = 1 + int(np.argmax(amps[1:]))
    return (float(freqs[k]), float(amps[k]))


def dft(series: TimeSeries, n_max: int = N_MAX) -> Spectrum:
    """
    |n_max^-1 sum_n Z(n) exp(-2 pi i k n / n_max)| on k = 0..n_max-1.

    Longer series are truncated to their first n_max steps; shorter ones are
    an error. Step errors are propagated linearly to the bin amplitudes.
    """
    if n_max < 2:
        raise ValueError('n_max must be at least 2')
    if len(series) < n_max:
        raise SeriesTooShort('series has {} steps, need {}'.format(
            len(series), n_max))
    values = series.values[:n_max]
    if not np.all(np.isfinite(values)):
        raise FloquetError('series contains non-finite values')
    transform = np.fft.fft(values)
    amps = np.abs(transform) / n_max
    freqs = np.arange(n_max) / n_max

    errors = None
    if series.errors is not None:
        sigma = series.errors[:n_max]
        phases = np.exp(-2j * np.pi * np.outer(np.arange(n_max),
                                               np.arange(n_max)) / n_max)
        magnitude = np.abs(transform)
        direction = np.where(magnitude > 0.0, transform.conj()
                             / np.where(magnitude > 0.0, magnitude, 1.0), 0.0)
        slopes = np.real(phases * direction[:, None])
        slopes[magnitude == 0.0] = np.sqrt(0.5)
        errors = np.sqrt(np.sum((slopes * sigma[None, :]) ** 2, axis=1)) / n_max
    return Spectrum(freqs, amps, n_max, Peaks(_main_peak(freqs, amps)), errors)


def _side_peak(spec, candidates, window_mask, main_bin, prominence_factor,
               floor):
    window = np.flatnonzero(window_mask)
    if window.size == 0:
        return None
    background = spec.amps[window[window != main_bin]]
    threshold = floor
    if background.size:
        threshold = max(threshold, prominence_factor * np.median(background))
    inside = [k for k in candidates if window_mask[k] and spec.amps[k] > threshold]
    if not inside:
        return None
    best = max(inside, key=lambda k: (spec.amps[k], -k))
    return best


def find_dtqc_peaks(spec: Spectrum, window: float = WINDOW,
                    prominence_factor: float = PROMINENCE_FACTOR,
                    min_relative: float = MIN_RELATIVE_AMPLITUDE) -> Peaks:
    """
    Locate the side peaks around the period-doubling frequency.

    Local maxima are searched in (0.5 - window, 0.5) and (0.5, 0.5 + window).
    A candidate must exceed prominence_factor times the median amplitude of
    its window (main bin excluded) and min_relative times the main-peak
    amplitude, so rescaling the series never changes the outcome. Side peaks
    are kept only in pairs mirrored about 0.5 within one bin.
    """
    if not 0.0 < window <= 0.5:
        raise ValueError('window must lie in (0, 0.5]')
    freqs, amps = spec.freqs, spec.amps
    main = _main_peak(freqs, amps)
    main_bin = int(round(main[0] * spec.n_max))
    floor = min_relative * main[1]
    candidates, _ = signal.find_peaks(amps)
    half_bin = 0.5 / spec.n_max
    left_mask = (freqs > 0.5 - window - 1e-12) & (freqs < 0.5 - half_bin)
    right_mask = (freqs > 0.5 + half_bin) & (freqs < 0.5 + window + 1e-12)

    minus = _side_peak(spec, candidates, left_mask, main_bin,
                       prominence_factor, floor)
    plus = _side_peak(spec, candidates, right_mask, main_bin,
                      prominence_factor, floor)
    if minus is None or plus is None:
        return Peaks(main)
    if abs((freqs[plus] - 0.5) - (0.5 - freqs[minus])) > 1.0 / spec.n_max + 1e-12:
        logger.debug('side peaks at %.3f and %.3f are not mirrored about 0.5',
                     freqs[minus], freqs[plus])
        return Peaks(main)
    return Peaks(main, (float(freqs[plus]), float(amps[plus])),
                 (float(freqs[minus]), float(amps[minus])))


def with_peaks(spec: Spectrum, peaks: Peaks) -> Spectrum:
    return replace(spec, peaks=peaks)


def classify(peaks: Peaks, n_max: int = N_MAX) -> str:
    """'DTQC' with side peaks, 'DTC' for a lone peak at 0.5, else 'none'."""
    if peaks.has_sides:
        return 'DTQC'
    if abs(peaks.main[0] - 0.5) < 0.5 / n_max:
        return 'DTC'
    return 'none'


def predicted_env(params: FloquetParams) -> float:
    """epsilon / (2 |theta_J|), in units of the drive frequency."""
    if params.theta_j == 0.0:
        raise FloquetError('theta_J must be non-zero')
    return epsilon_of(params) / (2 * abs(params.theta_j))


def peaks_text(peaks: Peaks) -> str:
    """Flat 'key value' block; absent quantities read 'nan'."""
    def show(value):
        return 'nan' if value is None else repr(float(value))

    plus = peaks.side_plus or (None, None)
    minus = peaks.side_minus or (None, None)
    rows = [('omega_main', peaks.main[0]), ('a_main', peaks.main[1]),
            ('omega_plus', plus[0]), ('a_plus', plus[1]),
            ('omega_minus', minus[0]), ('a_minus', minus[1]),
            ('omega_env', peaks.omega_env), ('a_side', peaks.a_side)]
    return ''.join('{} {}\n'.format(key, show(value)) for key, value in rows)
