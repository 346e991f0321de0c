class InvalidDimensionError(ValueError):
    """A matrix or signal dimension is zero, negative or out of range."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible shapes."""


class DomainError(ValueError):
    """A closed-form quantity was evaluated outside its domain."""


class DegenerateColumnsError(ArithmeticError):
    """The selected columns are numerically rank deficient."""


class DegenerateRatioError(ArithmeticError):
    """The greedy selection ratio has a zero denominator."""
