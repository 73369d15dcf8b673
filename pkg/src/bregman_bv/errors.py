"""Exception types shared across the package."""


class BregmanError(ValueError):
    """Base class for input validation failures."""


class DomainError(BregmanError):
    """A point lies outside the domain of a generator or parameter map."""


class DimensionError(BregmanError):
    """Array shapes or dimensions do not match."""


class EnumerationBudgetError(BregmanError):
    """Exact enumeration would exceed the configured support budget."""


class NumericalError(ArithmeticError):
    """A quantity that must be nonnegative came out clearly negative."""
