"""Exception hierarchy.

``InvalidInput`` covers anything the user handed us that we cannot accept
(maps to CLI exit code 2); every other ``FepError`` is a tool failure.
"""

from __future__ import annotations


class FepError(Exception):
    pass


class InvalidInput(FepError):
    pass


class LangSyntaxError(InvalidInput, SyntaxError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.msg = message
        self.line = line
        self.column = column


class LangTypeError(InvalidInput, TypeError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{line}:{column}: {message}")
        self.msg = message
        self.line = line
        self.column = column


class MisalignedScript(FepError):
    pass


class AlignmentMismatch(FepError):
    pass


class NoCoveringInput(FepError):
    pass


class EmptyPool(FepError):
    pass


class DomainError(InvalidInput, ValueError):
    pass


class MixedMode(InvalidInput):
    pass


class PreconditionError(InvalidInput):
    pass
