"""Exception and warning types shared across the package."""


class QfepError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedObservableError(QfepError, ValueError):
    """Observable does not have a binary {-1, +1} spectrum."""


class InvalidWeightsError(QfepError, ValueError):
    """Interaction weights are negative or do not sum to one."""


class LandauerViolationError(QfepError, ValueError):
    """Thermodynamic inefficiency parameter below the ln 2 floor."""


class InvalidPartitionError(QfepError, ValueError):
    """Sector assignment overlaps or leaves qubits uncovered."""


class MemoryFullError(QfepError, RuntimeError):
    """Memory tape capacity exceeded and eviction is disabled."""


class ThermodynamicStarvationError(QfepError, RuntimeError):
    """Free-energy budget of the unobserved sector is exhausted."""


class ConditioningOnNullError(QfepError, ZeroDivisionError):
    """Bayesian update conditioned on zero-probability evidence."""


class InsufficientDataError(QfepError, ValueError):
    """Trajectory too short for the requested tail statistics."""


class ResourceLimitError(QfepError, ValueError):
    """Hilbert-space dimension beyond the supported desk-scale cap."""


class IdentificationFailureWarning(UserWarning):
    """Reference-sector model is not constant; re-identification is unreliable."""
