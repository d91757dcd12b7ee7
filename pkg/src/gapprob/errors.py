"""Exception hierarchy shared by all gapprob modules."""


class GapProbError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GapProbError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PrecisionInsufficientError(GapProbError, ArithmeticError):
    """Working precision is too low for a provably positive quantity to stay positive."""

    def __init__(self, message, required_bits=None):
        super().__init__(message)
        self.required_bits = required_bits


class ConvergenceError(GapProbError, ArithmeticError):
    """An iterative method ran out of budget; carries its best estimate."""

    def __init__(self, message, best=None, error=None):
        super().__init__(message)
        self.best = best
        self.error = error


class ConsistencyError(GapProbError, ArithmeticError):
    """Two independent routes to the same quantity disagree beyond tolerance."""


class SingularityError(GapProbError, ArithmeticError):
    """Evaluation point is too close to a pole of the formula."""


class CapabilityError(GapProbError, ValueError):
    """Request exceeds what is tabulated or implemented (e.g. series order)."""


class TransportError(GapProbError, ArithmeticError):
    """ODE transport hit a branch ambiguity of the implicit second derivative."""


class StiffnessError(TransportError):
    """ODE step size underflowed."""
