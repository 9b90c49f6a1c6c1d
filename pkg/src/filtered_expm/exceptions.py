"""Exception types raised across the package."""


class InfeasiblePlanError(ValueError):
    """No (M, N) pair in the search window meets the error tolerance."""


class ResourceCapError(MemoryError):
    """Predicted fill of an unfiltered computation exceeds the memory cap."""

    def __init__(self, message, predicted_bytes=None, cap_bytes=None):
        super().__init__(message)
        self.predicted_bytes = predicted_bytes
        self.cap_bytes = cap_bytes


class NonFiniteError(ValueError):
    """Input matrix holds NaN or infinite entries."""


class MatrixMarketError(ValueError):
    """Malformed or unsupported Matrix Market input.

    Parameters
    ----------
    message : str
        Human readable description.
    lineno : int, optional
        1-based line number in the offending file, when known.
    """

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
