"""Exception hierarchy shared across the package."""


class MovancError(Exception):
    """Base class for all errors raised by movanc."""


class CorruptSignalError(MovancError, ValueError):
    """A non-finite sample entered a streaming primitive."""


class InvalidBandError(MovancError, ValueError):
    pass


class RecordingError(MovancError, ValueError):
    """Unsupported, truncated or mismatched recording file."""


class InsufficientRecordingError(RecordingError):
    pass


class DivergenceError(MovancError, ArithmeticError):
    """The adaptive filter produced a non-finite weight.

    ``index`` is the first sample at which a bad weight appeared.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularSystemError(MovancError, ArithmeticError):
    pass


class ConvergenceError(MovancError, ArithmeticError):
    pass


class ScenarioError(MovancError, ValueError):
    """Invalid scenario description.  ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
