"""Exception types shared across the package."""


class MfrfError(Exception):
    """Base class for all errors raised by :mod:`mfrf`."""


class DomainError(MfrfError, ValueError):
    """An argument lies outside the domain of the operation."""


class InfeasibleError(MfrfError):
    """The design problem has no feasible point for the given inputs.

    Attributes:
        required_energy: Smallest transmit energy that would make the
            problem feasible, when known.
    """

    def __init__(self, message, required_energy=None):
        super().__init__(message)
        self.required_energy = required_energy


class NumericalError(MfrfError, ArithmeticError):
    """A numerical precondition failed (singular matrix, negative spectrum, ...)."""


class ConditioningError(NumericalError):
    """A matrix is too ill-conditioned for a reliable solve."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class MonotonicityError(NumericalError, AssertionError):
    """The MM inner loop produced an increasing objective."""
