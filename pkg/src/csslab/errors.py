"""Exception types raised by the laboratory."""

from __future__ import annotations


class CSSLabError(Exception):
    """Base class for all library errors."""


class GridError(CSSLabError, ValueError):
    """A field does not match the grid it is used with."""


class ParameterError(CSSLabError, ValueError):
    """An argument is outside the range an operation accepts."""


class PreconditionError(CSSLabError, ValueError):
    """An input violates a documented precondition (gauge consistency etc.)."""


class CostGuardError(CSSLabError, ValueError):
    """A direct-summation oracle was asked to run on a grid that is too large."""


class CheckpointFormatError(CSSLabError, ValueError):
    """A checkpoint file does not match the binary layout."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class IntegrationError(CSSLabError, RuntimeError):
    """Time stepping produced non-finite values."""

    def __init__(self, message: str, t: float, step_index: int):
        super().__init__(f"{message} at t={t!r}, step {step_index}")
        self.t = t
        self.step_index = step_index


class ConfigError(CSSLabError, ValueError):
    """A configuration file or override could not be parsed or validated."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        text = f"{message} ({', '.join(where)})" if where else message
        super().__init__(text)
        self.key = key
        self.line = line


class DomainValidityWarning(UserWarning):
    """A coordinate-weighted operator was applied to a field that reaches the box edge."""
