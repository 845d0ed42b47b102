"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DataValidationError(ValueError):
    """Input data violates a structural precondition (too few studies, bad CSV, ...)."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or produced an invalid result."""
