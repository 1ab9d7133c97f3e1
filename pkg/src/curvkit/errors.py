"""Exception hierarchy shared by all curvkit modules."""


class CurvkitError(Exception):
    """Base class for every error raised by curvkit."""


class IndeterminateSum(CurvkitError, ArithmeticError):
    """Raised when +inf and -inf are added."""


class NoBound(CurvkitError):
    """A calculus rule produced an indeterminate sum, so no bound is available."""


class DimensionMismatch(CurvkitError, ValueError):
    pass


class MissingCandidates(CurvkitError):
    """An image set or marginal function was queried without candidate points."""


class InfeasibleBase(CurvkitError):
    """A direction or base point violates the precondition of a cone query."""


class PreconditionViolated(CurvkitError):
    pass


class NoMultiplier(CurvkitError):
    """The multiplier system has no solution."""


class AssumptionNotDeclared(CurvkitError):
    pass


class Unsupported(CurvkitError, NotImplementedError):
    pass


class SchemaError(CurvkitError, ValueError):
    """Malformed input document.

    ``pointer`` is the JSON pointer of the offending node.
    """

    def __init__(self, pointer, message=""):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}" if message else pointer)


class InfeasibleBasePoint(CurvkitError):
    """The base point of a problem file is infeasible."""
