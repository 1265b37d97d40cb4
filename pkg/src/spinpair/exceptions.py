class InputError(ValueError):
    """Raised when arguments violate a physical or structural precondition."""


class NumericError(ArithmeticError):
    """Raised when a computation produces non-finite or inconsistent numbers."""
