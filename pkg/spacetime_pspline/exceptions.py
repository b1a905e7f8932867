"""
Exception hierarchy for spacetime-pspline.

Every exception stores a human-readable ``message`` attribute. The CLI maps
the three families below onto its exit codes:

- :class:`DataError` (exit code 2): problems with the input data
- :class:`ConfigurationError` (exit code 3): invalid or unsupported settings
- :class:`NumericalError` (exit code 4): failures of the numerical pipeline
"""

from typing import Optional


class PsplineError(Exception):
    """Base class for all errors raised by spacetime-pspline.

    Attributes:
        message (str): Explanation of the error
    """

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(self.message)


class DataError(PsplineError):
    """Exception raised when input data cannot be used.

    This exception is raised in the following cases:
    - Non-finite coordinates, times or values
    - Negative values under the log1p transform
    - Unparseable numeric or date fields

    Attributes:
        message (str): Explanation of the error
        row (Optional[int]): 1-based data row that triggered the error, if known
        axis (Optional[str]): Name of the offending coordinate axis, if any
    """

    def __init__(
        self, message: str, row: Optional[int] = None, axis: Optional[str] = None
    ) -> None:
        self.row = row
        self.axis = axis
        super().__init__(message)


class SchemaError(DataError):
    """Exception raised when an input file lacks required columns."""


class DomainError(DataError):
    """Exception raised when an argument lies outside its admissible domain.

    Examples are points outside the knot range of a basis, or a negative
    smoothing parameter.
    """


class DegeneracyError(DataError):
    """Exception raised when a geometric construction degenerates.

    Raised for instance when fewer than three non-collinear well locations
    are available for a spatial convex hull.
    """


class ConfigurationError(PsplineError):
    """Exception raised for invalid model, selection or run configuration."""


class UnsupportedCombinationError(ConfigurationError):
    """Exception raised when two valid settings cannot be used together."""


class NumericalError(PsplineError):
    """Exception raised when the numerical pipeline cannot produce a result."""


class UnidentifiableNullSpaceError(NumericalError):
    """Exception raised when the data cannot pin down the unpenalised component.

    This happens when the rotated flat-prior block of the design is
    (numerically) singular, e.g. when all observations share one location.
    """


class SingularityError(NumericalError):
    """Exception raised when an unregularised ridge block is singular."""


class StabilityError(NumericalError):
    """Exception raised when the PDE time stepping blows up.

    Attributes:
        message (str): Explanation of the error
        step (int): Index of the time step at which instability was detected
    """

    def __init__(self, message: str, step: int) -> None:
        self.step = step
        super().__init__(message)


class CriterionUndefinedError(NumericalError):
    """Exception raised when a selection criterion is undefined at a given λ."""


class BenchmarkError(NumericalError):
    """Exception raised when too many benchmark replicates fail."""
