"""Exception types shared across the analysis modules."""


class FddeStabError(Exception):
    """Base class for all package errors."""


class DomainError(FddeStabError, ValueError):
    """A closed-form expression was evaluated outside its domain."""


class DegenerateInput(FddeStabError, ValueError):
    """Parameters sit on a measure-zero line where no pattern is defined."""


class BracketError(FddeStabError):
    """No sign change was found where one is guaranteed; widen the search."""


class NonConvergence(FddeStabError):
    """An iterative solver stopped without meeting its tolerance.

    The partial result (if any) is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DerivativeVanished(NonConvergence):
    pass


class IterationLimit(NonConvergence):
    pass


class InconclusiveVerdict(FddeStabError):
    """A stability oracle could not separate the root from the imaginary axis."""


class StepTooLarge(FddeStabError, ValueError):
    """The simulation step exceeds the smallest non-zero delay."""


class SchemeDefect(FddeStabError):
    """Refinement errors did not decrease monotonically."""
