"""Conditional preprocessing over the fixed built-in macro set.

The preprocessor knows exactly three macros (__CUDACC__, __CUDA_ARCH__,
__CUDACC_RELAXED_CONSTEXPR__) and the directives #ifdef/#ifndef/#else/#endif
plus #error.  #pragma lines pass through untouched.  Output preserves the
line/column structure of the input so later diagnostics stay accurate.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..diagnostics import SrcLoc

BUILTIN_MACROS = frozenset(
    {"__CUDACC__", "__CUDA_ARCH__", "__CUDACC_RELAXED_CONSTEXPR__"}
)

HOST_PASS = "host"
DEVICE_PASS = "device"


class PreprocessorError(Exception):
    """Raised for E0002 conditions: bad directives or a triggered #error."""

    def __init__(self, loc: SrcLoc, message: str):
        super().__init__(f"{loc}: {message}")
        self.loc = loc
        self.message = message


@dataclass(frozen=True)
class PpPass:
    """One compile pass: the device pass defines __CUDA_ARCH__."""

    kind: str
    defined: frozenset

    def __post_init__(self):
        if self.kind not in (HOST_PASS, DEVICE_PASS):
            raise ValueError(f"unknown pass kind {self.kind!r}")
        unknown = set(self.defined) - BUILTIN_MACROS
        if unknown:
            raise ValueError(f"not built-in macros: {sorted(unknown)}")


@dataclass(frozen=True)
class CompileProfile:
    """Compiler identity and flags a check/run is performed under."""

    compiler: str = "nvcc"
    cuda_version: int = 12
    relaxed_constexpr: bool = False
    erase_specifiers: bool = False

    def __post_init__(self):
        if self.compiler not in ("nvcc", "plain"):
            raise ValueError(f"unknown compiler {self.compiler!r}")
        if self.cuda_version not in (9, 10, 11, 12):
            raise ValueError(f"unsupported cuda version {self.cuda_version}")
        if self.relaxed_constexpr and self.compiler != "nvcc":
            raise ValueError("relaxed constexpr is an nvcc-only flag")
        if self.erase_specifiers and self.compiler != "plain":
            raise ValueError("specifier erasure applies to the plain profile only")

    def passes(self) -> list[PpPass]:
        if self.compiler == "plain":
            return [PpPass(HOST_PASS, frozenset())]
        base = {"__CUDACC__"}
        if self.relaxed_constexpr:
            base.add("__CUDACC_RELAXED_CONSTEXPR__")
        return [
            PpPass(HOST_PASS, frozenset(base)),
            PpPass(DEVICE_PASS, frozenset(base | {"__CUDA_ARCH__"})),
        ]

    def trap_error_code(self) -> int:
        # __trap produced 4 under Cuda 9 and 207 under Cuda 10 through 12.
        return 4 if self.cuda_version == 9 else 207


def join_continuations(text: str) -> str:
    """Splice backslash-newline before directive scanning, keeping line count."""
    lines = text.split("\n")
    out = []
    i = 0
    while i < len(lines):
        line = lines[i]
        blanks = 0
        while line.endswith("\\") and i + blanks + 1 < len(lines):
            line = line[:-1] + lines[i + blanks + 1]
            blanks += 1
        out.append(line)
        out.extend([""] * blanks)
        i += blanks + 1
    return "\n".join(out)


def strip_comments(text: str) -> str:
    """Blank out // and block comments, preserving lines and columns."""
    out = []
    i = 0
    n = len(text)
    in_string = False
    in_block = False
    in_line = False
    while i < n:
        c = text[i]
        nxt = text[i + 1] if i + 1 < n else ""
        if in_block:
            if c == "*" and nxt == "/":
                out.append("  ")
                i += 2
                in_block = False
            else:
                out.append(c if c == "\n" else " ")
                i += 1
        elif in_line:
            if c == "\n":
                out.append(c)
                in_line = False
            else:
                out.append(" ")
            i += 1
        elif in_string:
            out.append(c)
            if c == '"' or c == "\n":
                in_string = False
            i += 1
        else:
            if c == '"':
                in_string = True
                out.append(c)
                i += 1
            elif c == "/" and nxt == "/":
                out.append("  ")
                i += 2
                in_line = True
            elif c == "/" and nxt == "*":
                out.append("  ")
                i += 2
                in_block = True
            else:
                out.append(c)
                i += 1
    return "".join(out)


_CONDITIONALS = ("ifdef", "ifndef")


def preprocess(text: str, pp: PpPass, file: str = "<unit>") -> str:
    """Resolve conditional directives for one pass.

    Inactive regions and directive lines become blank lines.  A #error in an
    active region raises PreprocessorError carrying its message text, as do
    unbalanced or unknown directives and unknown macro names.
    """
    prepared = strip_comments(join_continuations(text))
    out = []
    # Stack entries: (parent_active, taken_branch, else_seen, open_loc).
    stack: list[list] = []
    active = True
    for lineno, line in enumerate(prepared.split("\n"), start=1):
        stripped = line.strip()
        if not stripped.startswith("#"):
            out.append(line if active else "")
            continue
        loc = SrcLoc(file, lineno, 1)
        words = stripped[1:].split(None, 1)
        name = words[0] if words else ""
        rest = words[1].strip() if len(words) > 1 else ""
        if name == "pragma":
            out.append(line if active else "")
            continue
        if name in _CONDITIONALS:
            if not rest or len(rest.split()) != 1:
                raise PreprocessorError(loc, f"#{name} expects exactly one macro name")
            if rest not in BUILTIN_MACROS:
                raise PreprocessorError(loc, f'unknown macro "{rest}" in #{name}')
            cond = (rest in pp.defined) == (name == "ifdef")
            stack.append([active, cond, False, loc])
            active = active and cond
        elif name == "else":
            if not stack:
                raise PreprocessorError(loc, "#else without matching #ifdef/#ifndef")
            if stack[-1][2]:
                raise PreprocessorError(loc, "second #else in one conditional")
            stack[-1][2] = True
            stack[-1][1] = not stack[-1][1]
            active = stack[-1][0] and stack[-1][1]
        elif name == "endif":
            if not stack:
                raise PreprocessorError(loc, "#endif without matching #ifdef/#ifndef")
            active = stack.pop()[0]
        elif name == "error":
            if active:
                raise PreprocessorError(loc, f"#error: {rest}")
        else:
            raise PreprocessorError(loc, f"unknown preprocessor directive #{name}")
        out.append("")
    if stack:
        raise PreprocessorError(stack[-1][3], "unterminated #ifdef/#ifndef")
    return "\n".join(out)
