class QbdError(Exception):
    """Base class for analysis failures."""


class ConvergenceError(QbdError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance.

    ``diagnostics`` holds the iterate state at the point of failure.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class DomainError(QbdError, ValueError):
    """An argument lies outside the region where the quantity exists."""


class PreconditionError(QbdError, ValueError):
    """The model does not satisfy a requirement of the requested analysis."""


class ClassificationError(QbdError):
    """Critical points fit none of the three configuration types."""
