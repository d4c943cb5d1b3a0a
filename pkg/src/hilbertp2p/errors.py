"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation accepts."""


class EmptyInputError(DomainError):
    pass


class ConfigError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class NumericError(FloatingPointError):
    pass


class NumericUnderflowError(NumericError):
    pass


class PreconditionError(RuntimeError):
    """Valid input that cannot support the requested operation, such as a
    sequence too short for the chosen pairing."""
