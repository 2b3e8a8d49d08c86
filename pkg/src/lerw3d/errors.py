"""Exception types raised across the package."""


class LerwError(Exception):
    """Base class for all package errors."""


class InvalidPath(LerwError, ValueError):
    pass


class CoordinateOverflow(LerwError, ValueError):
    pass


class StoppingBudgetExceeded(LerwError):
    """The step budget ran out before the primary stopping rule fired."""

    def __init__(self, partial, message="step budget exhausted before stopping rule"):
        super().__init__(message)
        self.partial = partial


class NeverExits(LerwError, ValueError):
    pass


class NeverHits(LerwError, ValueError):
    pass


class EmptyPath(LerwError, ValueError):
    pass


class EndpointMismatch(LerwError, ValueError):
    pass


class SingularSystem(LerwError):
    pass


class NonConvergent(LerwError):
    pass


class DomainTooLarge(LerwError, ValueError):
    pass


class PreconditionViolated(LerwError, ValueError):
    def __init__(self, condition, message=""):
        super().__init__(f"condition ({condition}) violated" + (f": {message}" if message else ""))
        self.condition = condition


class DeadEnd(LerwError):
    pass


class EmptyDomain(LerwError, ValueError):
    pass


class NotInDomain(LerwError, ValueError):
    pass


class BetaOutOfRange(LerwError, UserWarning):
    pass


class NoConditioningEvents(LerwError):
    pass


class ZeroMeanX(LerwError, ZeroDivisionError):
    pass


class BadRadii(LerwError, ValueError):
    pass


class EmptySet(LerwError, ValueError):
    pass


class NeverExitsBox(LerwError, ValueError):
    pass


class BadDelta(LerwError, ValueError):
    pass


class CurveTooShort(LerwError, ValueError):
    pass


class InsufficientLevels(LerwError, ValueError):
    pass


class UnknownExperiment(LerwError, KeyError):
    pass


class InvalidParams(LerwError, ValueError):
    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class IoFailure(LerwError, OSError):
    pass


class SchemaMismatch(LerwError, ValueError):
    pass
