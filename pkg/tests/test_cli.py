import re
import subprocess
import sys

import pytest

from exspace.cli import main
from exspace.diagnostics import (
    CODE_REGISTRY,
    Diagnostic,
    SrcLoc,
    format_diagnostic,
)

PROBLEM_T = """struct H {
  __host__ int call() { return 3; }
};

struct D {
  __device__ int call() { return 2; }
};

template< typename T >
__host__ __device__
int wrap() {
  return T{}.call();
}

int main() {
  return wrap< H >();
}
"""

KERNEL = """__device__ void print() {
  printf( "." );
}
__global__ void kernel( int N ) {
  for( int n = 0; n < N; ++n ) {
    print();
  }
}
int main() {
  kernel<<< 4, 3 >>>( 2 );
  return cudaDeviceSynchronize();
}
"""


@pytest.fixture()
def problem_t(tmp_path):
    p = tmp_path / "problem_t.mcu"
    p.write_text(PROBLEM_T)
    return p


def test_check_warning_exits_zero(problem_t, capsys):
    rc = main(["check", "--mode=classic", str(problem_t)])
    out = capsys.readouterr().out.strip().splitlines()
    assert rc == 0
    assert len(out) == 1
    assert "warning[W1101]" in out[0]
    assert "is not allowed" in out[0]


def test_check_error_exits_one(problem_t, tmp_path, capsys):
    bad = tmp_path / "bad.mcu"
    bad.write_text(PROBLEM_T.replace("wrap< H >", "wrap< D >"))
    rc = main(["check", "--mode=sound", str(bad)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "error[E1102]" in out


def test_check_unknown_flag_exits_two(problem_t, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check", "--bogus", str(problem_t)])
    assert exc.value.code == 2


def test_check_unreadable_file_exits_two(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check", str(tmp_path / "missing.mcu")])
    assert exc.value.code == 2


def test_flag_combination_validation(problem_t):
    with pytest.raises(SystemExit) as exc:
        main(["check", "--profile=plain", "--relaxed-constexpr", str(problem_t)])
    assert exc.value.code == 2


def test_run_passes_program_exit_through(problem_t, capsys):
    rc = main(["run", str(problem_t)])
    assert rc == 3
    out = capsys.readouterr().out
    assert "W1101" in out  # the check phase still reports


def test_run_prints_program_output(tmp_path, capsys):
    p = tmp_path / "kernel.mcu"
    p.write_text(KERNEL)
    rc = main(["run", str(p)])
    out = capsys.readouterr().out
    assert rc == 0
    assert out == "." * 24


def test_run_refuses_errors_without_force(tmp_path, capsys):
    p = tmp_path / "bad.mcu"
    p.write_text("struct D { __device__ void call() {} };\nint main() { D{}.call(); return 0; }\n")
    rc = main(["run", str(p)])
    assert rc == 1
    rc = main(["run", "--force", str(p)])
    assert rc == 101


def test_run_trap_exit_codes(tmp_path):
    p = tmp_path / "trap.mcu"
    p.write_text(
        "__global__ void k() { release_assert( false ); }\n"
        "int main() {\n  k<<< 1, 1 >>>();\n  return cudaDeviceSynchronize();\n}\n"
    )
    assert main(["run", str(p)]) == 207
    assert main(["run", "--cuda-version=9", str(p)]) == 4


def test_corpus_command(corpus_dir, capsys):
    rc = main(["corpus", str(corpus_dir)])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.strip().endswith("failed 0")


def test_corpus_idempotence(corpus_dir, capsys):
    main(["corpus", str(corpus_dir)])
    first = capsys.readouterr().out
    main(["corpus", str(corpus_dir)])
    second = capsys.readouterr().out
    assert first == second


def test_corpus_empty_directory_exits_two(tmp_path, capsys):
    assert main(["corpus", str(tmp_path)]) == 2


def test_corpus_failure_reported(tmp_path, capsys):
    f = tmp_path / "broken.mcu"
    f.write_text("void f() { gone(); }\n")
    rc = main(["corpus", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "unexpected" in out
    assert "failed 1" in out


# -- formatting ----------------------------------------------------------------


def test_machine_format_is_bit_exact():
    d = Diagnostic.make(
        "W1101",
        SrcLoc("problem_t.mcu", 12, 10),
        "calling a host function from a host device function is not allowed",
    )
    assert format_diagnostic(d) == (
        "problem_t.mcu:12:10: warning[W1101]: calling a host function "
        "from a host device function is not allowed"
    )


def test_suppressed_diagnostics_format_to_nothing():
    d = Diagnostic.make("N0001", SrcLoc("a.mcu", 1, 1), "note text")
    d.suppressed = True
    assert format_diagnostic(d) is None
    assert format_diagnostic(d, "human", source="x") is None


def test_human_format_adds_excerpt_and_caret():
    src = "line one\n  D{}.call();\n"
    d = Diagnostic.make("E1001", SrcLoc("a.mcu", 2, 3), "msg")
    text = format_diagnostic(d, "human", source=src)
    lines = text.splitlines()
    assert lines[0].endswith("msg")
    assert lines[1] == "  D{}.call();"
    assert lines[2] == "  ^"


_MACHINE_RE = re.compile(
    r"^(?P<file>.+?):(?P<line>\d+):(?P<col>\d+): "
    r"(?P<sev>error|warning|note)\[(?P<code>[EWN]\d{4})\]: (?P<msg>.*)$"
)


def test_machine_format_round_trips_for_every_code():
    for code, (severity, summary) in CODE_REGISTRY.items():
        d = Diagnostic.make(code, SrcLoc("unit.mcu", 3, 7), f"sample: {summary}")
        line = format_diagnostic(d)
        m = _MACHINE_RE.match(line)
        assert m, line
        assert m.group("file") == "unit.mcu"
        assert (int(m.group("line")), int(m.group("col"))) == (3, 7)
        assert m.group("sev") == severity.value
        assert m.group("code") == code
        assert m.group("msg") == f"sample: {summary}"


def test_color_env_toggle(problem_t, capsys, monkeypatch):
    monkeypatch.setenv("EXSPACE_COLOR", "1")
    main(["check", "--emit=human", str(problem_t)])
    colored = capsys.readouterr().out
    assert "\x1b[" in colored
    monkeypatch.setenv("EXSPACE_COLOR", "0")
    main(["check", "--emit=human", str(problem_t)])
    plain = capsys.readouterr().out
    assert "\x1b[" not in plain


def test_console_script_entry_point(tmp_path):
    p = tmp_path / "k.mcu"
    p.write_text(KERNEL)
    proc = subprocess.run(
        [sys.executable, "-m", "exspace.cli", "run", str(p)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout == "." * 24
