"""Diagnostic codes, source locations, and output formatting."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"
    NOTE = "note"


# Stable code registry: code -> (default severity, summary).
CODE_REGISTRY: dict[str, tuple[Severity, str]] = {
    "E0001": (Severity.ERROR, "parse error"),
    "E0002": (Severity.ERROR, "preprocessor error"),
    "E0101": (Severity.ERROR, "undefined name"),
    "E0102": (Severity.ERROR, "duplicate definition"),
    "E0103": (Severity.ERROR, "hdc member is not an HDC constant"),
    "E0104": (Severity.ERROR, "static assertion failed"),
    "E1001": (Severity.ERROR, "host code calls a device function"),
    "E1002": (Severity.ERROR, "device code calls a host function"),
    "E1003": (Severity.ERROR, "kernel launch from device code"),
    "E1004": (Severity.ERROR, "misused __global__ function"),
    "W1101": (Severity.WARNING, "host device function calls a host-only function"),
    "W1102": (Severity.WARNING, "host device function calls a device-only function"),
    "E1101": (Severity.ERROR, "reachable stray call to a host-only function"),
    "E1102": (Severity.ERROR, "reachable stray call to a device-only function"),
    "E1201": (Severity.ERROR, "instantiation depends on the compile pass"),
    "E1301": (Severity.ERROR, "no viable overload candidate"),
    "E1302": (Severity.ERROR, "ambiguous call"),
    "E1401": (Severity.ERROR, "empty execution-space set"),
    "E1501": (Severity.ERROR, "stray call"),
    "W1502": (Severity.WARNING, "host device function calls a one-sided function"),
    "N0001": (Severity.NOTE, "kernel launch skipped after device error"),
}


@dataclass(frozen=True, order=True)
class SrcLoc:
    """1-based position in a source file."""

    file: str
    line: int
    col: int

    def __post_init__(self):
        if self.line < 1 or self.col < 1:
            raise ValueError(f"source positions are 1-based: {self.line}:{self.col}")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.col}"


@dataclass
class Diagnostic:
    code: str
    severity: Severity
    loc: SrcLoc
    message: str
    suppressed: bool = field(default=False)

    @classmethod
    def make(cls, code: str, loc: SrcLoc, message: str) -> "Diagnostic":
        severity = CODE_REGISTRY[code][0]
        return cls(code, severity, loc, message)

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def sort_key(self):
        return (self.loc.file, self.loc.line, self.loc.col, self.code, self.message)

    def dedup_key(self):
        return (self.loc, self.code, self.message)


_COLORS = {
    Severity.ERROR: "\x1b[31;1m",
    Severity.WARNING: "\x1b[35;1m",
    Severity.NOTE: "\x1b[36m",
}
_RESET = "\x1b[0m"


def format_diagnostic(
    d: Diagnostic,
    style: str = "machine",
    source: str | None = None,
    color: bool = False,
) -> str | None:
    """Render one diagnostic, or None if it is suppressed.

    The machine style is the stable one-line format
    ``<path>:<line>:<col>: <severity>[<CODE>]: <message>``; the human style
    appends the offending source line and a caret.
    """
    if d.suppressed:
        return None
    word = d.severity.value
    if color:
        word = f"{_COLORS[d.severity]}{word}{_RESET}"
    line = f"{d.loc.file}:{d.loc.line}:{d.loc.col}: {word}[{d.code}]: {d.message}"
    if style == "machine" or source is None:
        return line
    lines = source.splitlines()
    if 1 <= d.loc.line <= len(lines):
        excerpt = lines[d.loc.line - 1]
        caret = " " * (d.loc.col - 1) + "^"
        return f"{line}\n{excerpt}\n{caret}"
    return line


def finish_diagnostics(diags: list[Diagnostic]) -> list[Diagnostic]:
    """Deduplicate and order diagnostics by (file, line, col, code)."""
    seen = {}
    for d in diags:
        seen.setdefault(d.dedup_key(), d)
    return sorted(seen.values(), key=Diagnostic.sort_key)
