"""Shared exception types."""


class NumericalError(RuntimeError):
    """A linear solve, factorization or solver run failed to meet its accuracy contract."""
