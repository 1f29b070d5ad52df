"""Errors raised by the front end. All carry a source location when known."""

from __future__ import annotations


class DslError(Exception):
    def __init__(self, message: str, line: int | None = None,
                 column: int | None = None, origin: str | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.origin = origin
        super().__init__(str(self))

    def __str__(self) -> str:
        loc = ""
        if self.line is not None:
            loc = f"{self.origin or '<input>'}:{self.line}:{self.column}: "
        return f"{loc}{self.message}"


class ParseError(DslError):
    """Malformed syntax; cites the line/column of the offending token."""


class UnknownIdentifierError(DslError):
    pass


class DuplicateModeError(DslError):
    pass


class MissingInitError(DslError):
    pass


class MissingGoalError(DslError):
    pass


class CyclicMacroError(DslError):
    pass


class RedefinedMacroError(DslError):
    pass


class TestOptionError(DslError):
    pass


class UnknownTestNameError(TestOptionError):
    pass


class TestArityError(TestOptionError):
    pass


class ParameterRangeError(TestOptionError):
    pass
