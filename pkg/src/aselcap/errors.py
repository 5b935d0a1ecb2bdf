"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(ArithmeticError):
    """An iterative numerical routine failed to converge.

    This signals a numerics bug rather than bad user input.
    """


class NumericalError(ArithmeticError):
    """A matrix or integrand evaluation produced non-finite results."""


class CapExceededError(ValueError):
    """Exhaustive enumeration would exceed the configured subset cap."""
