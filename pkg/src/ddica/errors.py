"""Exception taxonomy shared by all ddica modules."""


class DdicaError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(DdicaError):
    """Invalid configuration value or malformed config document."""


class DimensionError(DdicaError):
    """Matrix shapes incompatible with the requested operation."""


class SampleCountError(DdicaError):
    """Too few samples for a statistic to be defined."""


class SymmetryError(DdicaError):
    """Input matrix is not symmetric within tolerance."""


class PsdError(DdicaError):
    """Input matrix has an eigenvalue below the PSD tolerance."""


class ConvergenceError(DdicaError):
    """Iterative routine failed to converge within its budget."""


class RankError(DdicaError):
    """Input is rank deficient where full rank is required."""


class DegenerateComponentError(DdicaError):
    """A component is constant and cannot be correlated or normalized."""


class NumericError(DdicaError):
    """Non-finite values or a numerically impossible request."""
