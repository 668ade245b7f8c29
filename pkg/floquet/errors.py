"""Exceptions raised by the Floquet simulator.

Every error is a ValueError so callers can catch the broad class, while tests
and the CLI can tell the specific failure apart.
"""


class FloquetError(ValueError):
    """Base class of all simulator errors."""


class InvalidGraph(FloquetError):
    """A graph violates the lattice invariants."""


class DuplicateEdge(InvalidGraph):
    """An edge appears twice in a coupling map."""


class SelfLoop(InvalidGraph):
    """An edge joins a vertex to itself."""


class MalformedCouplingMap(InvalidGraph):
    """A coupling-map line is not a pair of non-negative integers."""


class PatternError(FloquetError):
    """An initial pattern does not fit its graph."""


class UnsupportedAngle(FloquetError):
    """No CZ decomposition exists for the requested angle."""


class CapExceeded(FloquetError):
    """The state vector would exceed the configured qubit cap."""


class BackendGraphMismatch(FloquetError):
    """The backend cannot simulate the given graph kind."""


class SingularGauge(FloquetError):
    """A gauge vector has no entry above the pseudo-inverse cutoff."""


class DimensionMismatch(FloquetError):
    """Virtual leg dimensions disagree across an edge."""


class GaugeTooLoose(FloquetError):
    """The state is too far from the Vidal gauge for local contraction."""


class NotConverged(FloquetError):
    """The trivial simple update did not reach its tolerance."""


class CalibrationUnderflow(FloquetError):
    """A calibration value is too small to divide by."""


class SeriesTooShort(FloquetError):
    """A time series is shorter than the requested transform length."""


class GridMismatch(FloquetError):
    """Two runs do not share step grids or measure sets."""


class ConfigError(FloquetError):
    """A run configuration is invalid."""
