"""Exception types raised by the library."""


class DomainError(ValueError):
    """A parameter lies outside the range where a formula is defined."""


class ConvergenceError(RuntimeError):
    """An iterative method failed to reach its tolerance.

    The final residual (or error estimate) and the iteration count are kept
    on the instance so callers can report them.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class MonitorViolation(RuntimeError):
    """A guaranteed discrete property (bounds or energy decay) was broken."""
