"""Exception types shared across the package."""


class AffclError(Exception):
    """Base class for all library errors."""


class IllegalRank(AffclError):
    pass


class NotIrreducible(AffclError):
    pass


class NotARoot(AffclError):
    pass


class NotSymmetric(AffclError):
    pass


class NotClosed(AffclError):
    pass


class NotSubrootSystem(AffclError):
    pass


class NonReduced(AffclError):
    pass


class NotInGradient(AffclError):
    pass


class NotSemiClosed(AffclError):
    pass


class ParameterViolation(AffclError):
    """A family constructor was given data violating a named constraint."""


class BudgetExceeded(AffclError):
    """An enumeration exceeded its configured candidate budget."""


class HullRepresentationError(AffclError):
    """The hull fixpoint disagreed with the window oracle."""


class InputError(AffclError):
    """Malformed JSON or CLI input."""
