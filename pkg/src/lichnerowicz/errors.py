"""Exception hierarchy shared by all modules."""


class LichnerowiczError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(LichnerowiczError, ValueError):
    """Invalid grid, config document or field file."""


class DomainError(LichnerowiczError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularDataError(DomainError):
    """Input data would require division by zero (e.g. a vanishing pi)."""


class PreconditionError(LichnerowiczError):
    """Standing hypotheses of an operation do not hold."""


class NoSupersolutionError(PreconditionError):
    """No constant supersolution can be built because (A4) fails."""


class InternalInconsistencyError(LichnerowiczError):
    """A computed object failed its own post-check."""


class NonConvergenceError(LichnerowiczError):
    """An iteration hit its budget before meeting its tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
