"""Exception types shared across the package."""


class SdrError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(SdrError, ValueError):
    """Malformed or inconsistent input (shape, symmetry, ranges)."""


class DomainError(SdrError, ValueError):
    """Input outside the mathematical domain of an operation."""


class SingularityError(SdrError):
    """Matrix numerically singular where positive definiteness is required."""


class ConvergenceError(SdrError):
    """Fixed-point iteration failed to converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class DegenerateNeighborhoodError(SdrError):
    """Kernel neighborhood around an anchor contains no other point."""


class RankDeficiencyError(SdrError):
    """Normal equations rank deficient beyond ridge repair."""

    def __init__(self, message, anchor=None):
        super().__init__(message)
        self.anchor = anchor


class EstimationError(SdrError):
    """Estimator could not produce a usable basis."""


class GenerationError(SdrError):
    """Simulated data generation failed (e.g. persistent non-SPD draws)."""


class ConfigError(SdrError):
    """Bad configuration key, value type, or combination."""


class DatasetError(SdrError):
    """Dataset file does not conform to the documented CSV format."""
