"""Exception types shared across the package."""


class GloriaError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(GloriaError, ValueError):
    """Invalid configuration document or CLI parameters."""


class ConvergenceError(GloriaError, RuntimeError):
    """An iterative routine failed to converge within its iteration cap."""


class DivergenceError(GloriaError, RuntimeError):
    """A solver run blew up (non-finite or runaway objective).

    The objective trace up to the failure point is attached as the
    ``trace`` attribute.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class GenerationError(GloriaError, RuntimeError):
    """Scene synthesis could not satisfy its constraints within the retry cap."""


class FormatError(GloriaError, ValueError):
    """A data file does not conform to its on-disk format."""
