"""Exception types shared across the package."""


class WeylflowError(Exception):
    """Base class for all package errors."""


class InvalidMetricError(WeylflowError):
    """Metric field is not symmetric positive definite at some grid point."""


class GridMismatchError(WeylflowError):
    """Two fields that must share a grid live on different grids."""


class TangencyError(WeylflowError):
    """A vector fails the ambient tangency constraint of its base point."""


class CutLocusError(WeylflowError):
    """Logarithm requested at (or too near) the cut locus of the base point."""


class ResolutionError(WeylflowError):
    """Neighbouring map values exceed the target injectivity bound; the grid
    is too coarse for the map."""


class NotComplexError(WeylflowError):
    """Operation requires a complex (even-dimensional, J-paired) domain."""


class SolverFailureError(WeylflowError):
    """An iterative solver exhausted its budget before reaching tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class HomotopyUndefinedError(WeylflowError):
    """Pointwise geodesic homotopy is undefined (injectivity violation or
    incompatible equivariance data)."""


class InsufficientHistoryError(WeylflowError):
    """Operation needs two consecutive flow snapshots."""


class ConfigError(WeylflowError):
    """Experiment configuration failed schema validation."""
