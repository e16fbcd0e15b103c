"""Exception types raised by the estimators."""


class IterfuncError(Exception):
    """Base class for all package errors."""


class SampleError(IterfuncError, ValueError):
    """Malformed or unusable input data."""


class OrientationError(IterfuncError):
    """The two samples cannot be ordered or crossed consistently."""


class IdentificationError(IterfuncError):
    """A normalization or instrument condition fails."""


class DensityError(IterfuncError):
    """An estimated density vanishes or is negative where it is needed."""


class BootstrapError(IterfuncError):
    """Too many bootstrap replicates failed."""


class SimulationError(IterfuncError):
    """Too many Monte Carlo repetitions failed."""
