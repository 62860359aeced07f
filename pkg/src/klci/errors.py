"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class SupportError(DomainError):
    """Data fall outside the support required by a method."""


class MomentViolationError(DomainError):
    """The empirical (1+eps)-th absolute moment exceeds the family bound."""


class BracketError(ValueError):
    """A root bracket does not satisfy the root finder's preconditions."""


class EmptySampleError(ValueError):
    """A method received fewer samples than it needs."""
