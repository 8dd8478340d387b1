"""Exception types shared across the library."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """A documented precondition on the inputs was violated."""


class RangeError(OverflowError):
    """Result is not representable in double precision.

    When the offending quantity is known in log space, ``log_value``
    carries its natural logarithm.
    """

    def __init__(self, message, log_value=None):
        super().__init__(message)
        self.log_value = log_value


class ValidityError(ValueError):
    """A required validity condition does not hold at these parameters."""


class NumericalError(RuntimeError):
    """An iterative numerical routine failed to converge or bracket."""


class SaturationError(OverflowError):
    """An integer search exceeded the supported range."""
