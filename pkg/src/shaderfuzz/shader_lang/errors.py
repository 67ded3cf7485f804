from __future__ import annotations

import enum


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column

    @property
    def location(self) -> tuple[int, int]:
        return (self.line, self.column)


class TypeErrorKind(enum.Enum):
    UndeclaredIdentifier = "UndeclaredIdentifier"
    TypeMismatch = "TypeMismatch"
    ArityMismatch = "ArityMismatch"
    MultipleMain = "MultipleMain"
    InvalidQualifier = "InvalidQualifier"
    Redeclaration = "Redeclaration"
    InvalidStatement = "InvalidStatement"


class ShaderTypeError(Exception):
    """A static semantic error; ``location`` is the 1-based (line, column)."""

    def __init__(self, kind: TypeErrorKind, message: str, location: tuple[int, int]):
        super().__init__(f"{location[0]}:{location[1]}: {kind.value}: {message}")
        self.kind = kind
        self.message = message
        self.location = location
