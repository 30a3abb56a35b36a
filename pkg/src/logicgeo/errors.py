"""Exception types shared across the package."""

from __future__ import annotations


class LogicGeoError(Exception):
    """Base class for every error raised by this package."""


class ParseError(LogicGeoError):
    """Raised when a term, formula, or algebra file fails to parse."""

    def __init__(self, message: str, text: str = "", pos: int | None = None):
        self.text = text
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


class ContextError(LogicGeoError):
    """Raised when variables, sorts, or term maps do not line up."""


class SignatureError(LogicGeoError):
    """Raised for malformed signatures or unknown operation names."""


class AlgebraError(LogicGeoError):
    """Raised for malformed operation tables or incompatible algebras."""


class LimitError(LogicGeoError):
    """Base class for configured resource limits being exceeded."""


class SpaceLimitError(LimitError):
    """Point space larger than the configured bound."""


class FragmentLimitError(LimitError):
    """Formula fragment larger than the configured bound."""


class FamilyLimitError(LimitError):
    """Definable-value family larger than the configured bound."""


class UsageError(LogicGeoError):
    """Raised for command line usage mistakes."""
