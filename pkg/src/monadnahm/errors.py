"""Exception types shared across the package."""


class MonadNahmError(Exception):
    """Base class for all package errors."""


class StructuralError(MonadNahmError, ValueError):
    """Malformed input: wrong shapes, wrong kinds, unparsable files."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class VerificationError(MonadNahmError):
    """A required identity or condition does not hold."""

    def __init__(self, message: str, check: str | None = None, witness=None):
        super().__init__(message)
        self.check = check
        self.witness = witness


class GenerationError(MonadNahmError, RuntimeError):
    """Random generation could not produce valid data within its retry budget."""


class NonConvergenceError(MonadNahmError, RuntimeError):
    """An iterative numerical procedure stopped before reaching its target."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = [] if trace is None else list(trace)


class WindowInstabilityError(MonadNahmError, RuntimeError):
    """Truncated Laurent window too small: results change when it grows."""
