"""Expected-diagnostics corpus harness.

Corpus files annotate offending lines with ``//~ <severity> <CODE> ["substr"]``
(or ``//~@<line> ...`` for a different line) and may carry ``//!`` header
directives selecting the mode, profile, and an expected run outcome.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .interp import run_program
from .spacecheck import Mode, analyze
from .syntax.preprocess import CompileProfile

_EXPECT_RE = re.compile(
    r"//~(?:@(?P<line>\d+))?\s+(?P<sev>error|warning|note)\s+"
    r"(?P<code>[EWN]\d{4})(?:\s+\"(?P<substr>[^\"]*)\")?"
)
_HEADER_RE = re.compile(r"^\s*//!\s*(?P<key>[a-z-]+)(?:\s*:\s*(?P<value>.*?))?\s*$")


@dataclass
class Expectation:
    line: int
    severity: str
    code: str
    substring: Optional[str]

    def describe(self) -> str:
        extra = f' "{self.substring}"' if self.substring else ""
        return f"line {self.line}: {self.severity}[{self.code}]{extra}"

    def matches(self, diag) -> bool:
        if diag.loc.line != self.line or diag.code != self.code:
            return False
        if diag.severity.value != self.severity:
            return False
        return self.substring is None or self.substring in diag.message


@dataclass
class FileConfig:
    mode: Mode
    profile: CompileProfile
    force: bool = False
    expect_exit: Optional[int] = None
    expect_stdout: Optional[bytes] = None


@dataclass
class CorpusResult:
    file: str
    matched: int = 0
    unmatched_expectations: list = field(default_factory=list)
    unexpected_diagnostics: list = field(default_factory=list)
    run_check: Optional[str] = None  # failure description, None if ok/absent

    @property
    def passed(self) -> bool:
        return (
            not self.unmatched_expectations
            and not self.unexpected_diagnostics
            and self.run_check is None
        )


def _decode_stdout(value: str) -> bytes:
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        value = value[1:-1]
    return value.replace("\\n", "\n").replace('\\"', '"').encode()


def parse_expectations(text: str) -> list:
    out = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        for m in _EXPECT_RE.finditer(line):
            target = int(m.group("line")) if m.group("line") else lineno
            out.append(
                Expectation(target, m.group("sev"), m.group("code"), m.group("substr"))
            )
    return out


def parse_header(text: str, default_mode: Mode, default_profile: CompileProfile) -> FileConfig:
    mode = default_mode
    compiler = default_profile.compiler
    version = default_profile.cuda_version
    relaxed = default_profile.relaxed_constexpr
    erase = default_profile.erase_specifiers
    force = False
    expect_exit = None
    expect_stdout = None
    for line in text.split("\n"):
        m = _HEADER_RE.match(line)
        if not m:
            continue
        key, value = m.group("key"), m.group("value")
        if key == "mode":
            mode = Mode(value)
        elif key == "profile":
            compiler = value
        elif key == "cuda-version":
            version = int(value)
        elif key == "relaxed-constexpr":
            relaxed = True
        elif key == "erase-specifiers":
            erase = True
        elif key == "force":
            force = True
        elif key == "expect-exit":
            expect_exit = int(value)
        elif key == "expect-stdout":
            expect_stdout = _decode_stdout(value)
        else:
            raise ValueError(f"unknown corpus directive //! {key}")
    profile = CompileProfile(compiler, version, relaxed, erase)
    return FileConfig(mode, profile, force, expect_exit, expect_stdout)


def run_corpus_file(
    path: Path, default_mode: Mode, default_profile: CompileProfile
) -> CorpusResult:
    text = path.read_text(encoding="utf-8")
    cfg = parse_header(text, default_mode, default_profile)
    expectations = parse_expectations(text)
    result = CorpusResult(str(path))

    analysis = analyze(text, str(path), cfg.profile, cfg.mode)
    unclaimed = list(analysis.diagnostics)
    for exp in expectations:
        hit = next((d for d in unclaimed if exp.matches(d)), None)
        if hit is None:
            result.unmatched_expectations.append(exp.describe())
        else:
            unclaimed.remove(hit)
            result.matched += 1
    result.unexpected_diagnostics = [
        f"{d.loc.line}:{d.loc.col}: {d.severity.value}[{d.code}]: {d.message}"
        for d in unclaimed
    ]

    wants_run = cfg.expect_exit is not None or cfg.expect_stdout is not None
    if wants_run:
        if analysis.has_errors and not cfg.force:
            result.run_check = "not run: the check reported errors"
        else:
            run = run_program(analysis)
            problems = []
            if cfg.expect_exit is not None and run.exit_code != cfg.expect_exit:
                problems.append(f"exit {run.exit_code}, expected {cfg.expect_exit}")
            if cfg.expect_stdout is not None and run.stdout != cfg.expect_stdout:
                problems.append(
                    f"stdout {run.stdout!r}, expected {cfg.expect_stdout!r}"
                )
            if problems:
                result.run_check = "; ".join(problems)
    return result


def run_corpus(
    directory: Path,
    default_mode: Mode = Mode.CLASSIC,
    default_profile: CompileProfile = CompileProfile(),
) -> tuple[list, str]:
    """Check every .mcu file in path order; the summary counts failures."""
    files = sorted(Path(directory).glob("*.mcu"))
    if not files:
        raise FileNotFoundError(f"no .mcu files under {directory}")
    results = [run_corpus_file(f, default_mode, default_profile) for f in files]
    failed = sum(1 for r in results if not r.passed)
    summary = f"passed {len(results) - failed} / failed {failed}"
    return results, summary
