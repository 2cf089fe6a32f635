"""Exception hierarchy shared across the package."""


class EGError(Exception):
    """Base class for every error raised by egarmijo."""


class NonHermitianInput(EGError, ValueError):
    pass


class ConvergenceFailure(EGError, ArithmeticError):
    pass


class DomainViolation(EGError, ValueError):
    """A matrix function was applied outside the scalar function's domain."""


class DimensionMismatch(EGError, ValueError):
    pass


class NotPSD(EGError, ValueError):
    pass


class TraceNotOne(EGError, ValueError):
    pass


class SingularDensity(EGError, ValueError):
    pass


class OutOfDomain(EGError, ValueError):
    """The loss is not finite at the given point (some tr(M_i rho) vanished)."""


class BacktrackLimitExceeded(EGError, RuntimeError):
    """``promised`` is the decrease ``tau |<g, step>|`` demanded by the first,
    longest trial step."""

    def __init__(self, message: str, promised: float = float("inf")):
        super().__init__(message)
        self.promised = promised


class ParseError(EGError, ValueError):
    pass


class ValidationError(EGError, ValueError):
    pass


class SolverError(EGError, RuntimeError):
    """Wraps an error raised mid-solve, keeping the trace recorded so far."""

    def __init__(self, cause, trace):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause
        self.trace = trace
