"""Shared exception types."""


class ContractError(ValueError):
    """A caller violated a documented precondition (shape, range, config)."""


class NumericError(ArithmeticError):
    """A numeric invariant broke at runtime (NaN/Inf where finite required)."""
