"""Exception types raised across the package."""


class VuclustError(Exception):
    """Base class for all package errors."""


class InvalidInputError(VuclustError, ValueError):
    """Input contains non-finite values or is otherwise malformed."""


class InvalidArgumentError(VuclustError, ValueError):
    """A scalar argument is out of its admissible range."""


class InvalidShapeError(VuclustError, ValueError):
    """Matrix shapes are incompatible with the requested operation."""


class ConfigurationError(VuclustError, ValueError):
    """Solver configuration is inconsistent with the dataset."""


class LoadError(VuclustError, OSError):
    """A dataset directory could not be read or failed validation."""

    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class NumericalFailure(VuclustError, ArithmeticError):
    """The solver produced a non-finite objective."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
