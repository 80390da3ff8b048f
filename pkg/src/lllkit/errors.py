"""Exception types raised across the package."""


class LLLError(Exception):
    """Base class for all package errors."""


class CapExceeded(LLLError):
    """A resampling loop hit its step budget.

    The partial run is attached so callers can inspect how far it got.
    """

    def __init__(self, message, report=None, log=None):
        super().__init__(message)
        self.report = report
        self.log = log


class ConditionViolated(LLLError):
    """The local lemma condition does not hold for the supplied x-values."""

    def __init__(self, message, margins=None):
        super().__init__(message)
        self.margins = margins


class SpaceTooLarge(LLLError):
    pass


class NoGoodAssignment(LLLError):
    pass


class DepthCapExceeded(LLLError):
    pass


class InfeasibleParams(LLLError):
    pass


class GirthTooSmall(LLLError):
    pass


class GraphTooLarge(LLLError):
    pass


class CoreTooLarge(LLLError):
    pass


class FlowInfeasible(LLLError):
    pass


class RetriesExhausted(LLLError):
    pass


class DimacsError(LLLError, ValueError):
    pass
