"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, ConvergenceError -> 3,
DataError (and subclasses) -> 4.
"""


class FairboundError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FairboundError):
    """Invalid configuration file or incompatible option combination."""


class DataError(FairboundError):
    """Problem with an input dataset."""


class SchemaError(DataError):
    """A required column role is missing from a CSV header."""


class ParseError(DataError):
    """A cell could not be parsed; message carries the 1-based row number."""


class EmptyDatasetError(DataError):
    """An operation produced or received a dataset with no examples."""


class ConvergenceError(FairboundError):
    """The optimizer ran out of iterations before reaching its tolerance."""

    def __init__(self, message: str, gradient_norm: float):
        super().__init__(message)
        self.gradient_norm = gradient_norm
