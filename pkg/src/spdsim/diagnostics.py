"""Positioned diagnostics plus the exception types shared by all modules."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    file: str = "<model>"
    line: int = 1
    column: int = 1
    length: int = 0

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError("line and column are 1-based")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


NO_SPAN = SourceSpan()


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: SourceSpan = field(default=NO_SPAN)
    severity: Severity = Severity.ERROR

    def __str__(self):
        return f"{self.span}: {self.severity.value}: {self.code}: {self.message}"

    def to_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "code": self.code,
            "file": self.span.file,
            "line": self.span.line,
            "column": self.span.column,
            "length": self.span.length,
            "message": self.message,
        }


def has_errors(diagnostics) -> bool:
    return any(d.severity is Severity.ERROR for d in diagnostics)


class DiagnosticError(ValueError):
    """Raised by the loaders when a model text cannot be turned into a model."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def codes(self):
        return [d.code for d in self.diagnostics]


class ValidationError(ValueError):
    """A malformed value object, e.g. an adjustment violating its invariants."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class ConfigError(ValueError):
    def __init__(self, message: str, code: str = "CONFIG_ERROR"):
        self.code = code
        super().__init__(f"{code}: {message}")


class AnalysisError(ValueError):
    def __init__(self, message: str, code: str = "ANALYSIS_ERROR"):
        self.code = code
        super().__init__(f"{code}: {message}")


class SimulationError(RuntimeError):
    """An internal invariant broke during a run; ``dump`` holds the state."""

    def __init__(self, message: str, dump: str = ""):
        self.dump = dump
        super().__init__(message if not dump else f"{message}\n{dump}")
