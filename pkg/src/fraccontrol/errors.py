"""Exception types raised by the toolkit."""


class FracControlError(Exception):
    """Base class for all toolkit errors."""


class DomainError(FracControlError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ValidationError(FracControlError, ValueError):
    """Input data violates a structural invariant.

    ``key`` names the offending configuration key or field when known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class AccuracyError(FracControlError, ArithmeticError):
    """A numerical method cannot deliver the requested accuracy.

    ``estimate`` carries the method's own error estimate.
    """

    def __init__(self, message, estimate=float("nan")):
        super().__init__(message)
        self.estimate = estimate


class ConvergenceError(FracControlError, RuntimeError):
    """An iteration did not converge within its budget.

    ``residual`` is the last residual and ``history`` the sequence of
    residuals (or deltas) observed.
    """

    def __init__(self, message, residual=float("nan"), history=()):
        super().__init__(message)
        self.residual = residual
        self.history = list(history)
