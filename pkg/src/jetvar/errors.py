"""Exception hierarchy shared by the engine and the command line."""
from __future__ import annotations


class JetError(Exception):
    """Base class for every error raised by jetvar."""


class ParseError(JetError, ValueError):
    def __init__(self, message: str, position: int | None = None, text: str | None = None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ExpressionClassError(JetError, ValueError):
    """The operation would leave the supported class of expressions."""


class OrderBoundExceeded(JetError):
    pass


class ComponentMismatch(JetError, ValueError):
    pass


class ExtractionError(JetError):
    """A total-divergence decomposition left a nonzero residual."""

    def __init__(self, message: str, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message}; residual = {residual}"
        super().__init__(message)


class InvariantViolation(ExtractionError):
    """An identity that must hold by construction failed."""


class Cancelled(JetError):
    pass
