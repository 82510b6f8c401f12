"""Exception and warning types shared across the package."""

from __future__ import annotations


class FracSpecError(Exception):
    """Base class for all package errors."""


class DomainError(FracSpecError, ValueError):
    """An argument lies outside the domain of a function or operator."""


class SingularityError(FracSpecError, ArithmeticError):
    """Evaluation at a point where the basis weight is singular, or a
    linear system turned out to be numerically singular."""


class ConstructionError(FracSpecError, ArithmeticError):
    """The column recurrence broke down."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class NonConvergenceError(FracSpecError, RuntimeError):
    """An iterative procedure hit its size or iteration cap.

    The partial result, if any, is attached as ``partial`` and the residual
    history as ``history``.
    """

    def __init__(self, message: str, history=None, partial=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.partial = partial


class AccuracyWarning(UserWarning):
    """A value was computed but is unlikely to be accurate."""
