"""Exception hierarchy shared across the package."""


class DisordynError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(DisordynError, ValueError):
    """Array shapes or lattice sizes do not match."""


class UnsupportedVariantError(DisordynError, ValueError):
    """Operation requires a translation-invariant disorder model."""


class FactorizationError(DisordynError, ValueError):
    """Covariance matrix is not positive semidefinite within tolerance."""


class NumericalError(DisordynError, RuntimeError):
    """A numerical routine failed or produced out-of-tolerance results."""


class InvariantViolation(NumericalError):
    """A density-matrix invariant was violated during propagation."""

    def __init__(self, message: str, time: float, magnitude: float):
        super().__init__(message)
        self.time = time
        self.magnitude = magnitude


class ResolutionError(NumericalError):
    """Grid cannot resolve the state (aliasing or clipping)."""


class UndefinedVisibilityError(DisordynError, ValueError):
    """Visibility is undefined for an empty window or flat-zero signal."""


class ConfigError(DisordynError, ValueError):
    """Scenario configuration is structurally invalid."""
