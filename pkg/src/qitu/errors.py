"""Exception hierarchy shared by every module."""


class QituError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(QituError, ValueError):
    """An argument lies outside the domain of an operation."""


class CapacityError(QituError):
    """An exhaustive oracle was asked to enumerate something too large."""


class PreconditionError(QituError):
    """A documented precondition of an operation does not hold."""


class InputError(QituError):
    """Malformed or invalid user input (bad JSON, non-GS valuation in strict mode)."""


class InvariantError(QituError, RuntimeError):
    """An internal invariant failed. Carries an optional state dump."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
