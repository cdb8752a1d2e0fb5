"""Exception types raised across the package."""


class OmtransError(Exception):
    """Base class for all package errors."""


class InvalidArgument(OmtransError, ValueError):
    """Bad dimensions, mode indices, rates or mismatched spaces."""


class NonUniqueSteadyState(OmtransError):
    """The Liouvillian has a degenerate steady manifold."""


class SolverFailure(OmtransError):
    """A linear solve did not reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StepSizeError(OmtransError):
    """Time integration drifted out of the trace-preserving manifold."""


class ExceptionalPoint(OmtransError):
    """The weak-drive amplitude system is singular at this parameter point."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class PoleError(ExceptionalPoint):
    """A closed-form denominator vanished."""


class FormulaDomainError(OmtransError, ValueError):
    """A closed-form formula was called outside its derivation conditions."""


class ConfigError(OmtransError):
    """Configuration file problem, anchored to a line when possible."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
