import pytest

from exspace.diagnostics import Severity
from exspace.sema import DEVICE, HOST, ExecSpace
from exspace.spacecheck import Mode, analyze, check_unit, legality
from exspace.syntax.preprocess import CompileProfile

GLOBAL = ExecSpace.Global
HD = ExecSpace.HostDevice

NVCC = CompileProfile()


def codes(src, mode=Mode.CLASSIC, profile=NVCC):
    return [(d.code, d.loc.line) for d in check_unit(src, "u.mcu", profile, mode)]


# ---------------------------------------------------------------------------
# The legality matrix, checked against a hand-written table over every
# combination of caller side x callee space x call kind x relaxed flag.

_TABLE = {
    # (caller, callee, kind, relaxed): expected code or None for ok
    (HOST, HOST, "direct", False): None,
    (HOST, HOST, "direct", True): None,
    (HOST, DEVICE, "direct", False): "E1001",
    (HOST, DEVICE, "direct", True): None,
    (HOST, GLOBAL, "direct", False): "E1004",
    (HOST, GLOBAL, "direct", True): "E1004",
    (HOST, HD, "direct", False): None,
    (HOST, HD, "direct", True): None,
    (DEVICE, HOST, "direct", False): "E1002",
    (DEVICE, HOST, "direct", True): None,
    (DEVICE, DEVICE, "direct", False): None,
    (DEVICE, DEVICE, "direct", True): None,
    (DEVICE, GLOBAL, "direct", False): "E1004",
    (DEVICE, GLOBAL, "direct", True): "E1004",
    (DEVICE, HD, "direct", False): None,
    (DEVICE, HD, "direct", True): None,
    (HOST, HOST, "launch", False): "E1004",
    (HOST, HOST, "launch", True): "E1004",
    (HOST, DEVICE, "launch", False): "E1004",
    (HOST, DEVICE, "launch", True): "E1004",
    (HOST, GLOBAL, "launch", False): None,
    (HOST, GLOBAL, "launch", True): None,
    (HOST, HD, "launch", False): "E1004",
    (HOST, HD, "launch", True): "E1004",
    (DEVICE, HOST, "launch", False): "E1003",
    (DEVICE, HOST, "launch", True): "E1003",
    (DEVICE, DEVICE, "launch", False): "E1003",
    (DEVICE, DEVICE, "launch", True): "E1003",
    (DEVICE, GLOBAL, "launch", False): "E1003",
    (DEVICE, GLOBAL, "launch", True): "E1003",
    (DEVICE, HD, "launch", False): "E1003",
    (DEVICE, HD, "launch", True): "E1003",
}


def test_legality_matrix_matches_brute_force_table():
    seen = 0
    for caller in (HOST, DEVICE):
        for callee in (HOST, DEVICE, GLOBAL, HD):
            for kind in ("direct", "launch"):
                for relaxed in (False, True):
                    v = legality(
                        caller, callee, kind,
                        relaxed_constexpr=relaxed, callee_is_constexpr=relaxed,
                    )
                    assert v.kind in ("ok", "warn", "error")
                    expected = _TABLE[(caller, callee, kind, relaxed)]
                    assert v.code == expected, (caller, callee, kind, relaxed)
                    seen += 1
    assert seen == 32


@pytest.mark.parametrize(
    "mode,callee,reachable,expected",
    [
        (Mode.CLASSIC, HOST, True, "W1101"),
        (Mode.CLASSIC, DEVICE, True, "W1102"),
        (Mode.FIDELITY, HOST, True, "W1101"),
        (Mode.FIDELITY, DEVICE, True, None),
        (Mode.SOUND, HOST, True, "E1101"),
        (Mode.SOUND, DEVICE, True, "E1102"),
        (Mode.SOUND, HOST, False, "W1101"),
        (Mode.SOUND, DEVICE, False, "W1102"),
        (Mode.PROPOSAL1, HOST, True, "W1101"),
        (Mode.PROPOSAL1, DEVICE, True, "W1102"),
        (Mode.PROPOSAL2, HOST, True, "E1501"),
        (Mode.PROPOSAL2, DEVICE, False, "W1502"),
    ],
)
def test_legality_for_host_device_callers(mode, callee, reachable, expected):
    caller = DEVICE if callee is HOST else HOST  # the mismatched side
    v = legality(
        caller, callee, caller_from_hd=True, mode=mode,
        mismatched_side_reachable=reachable,
    )
    assert v.code == expected


def test_legality_rejects_bad_caller():
    with pytest.raises(ValueError):
        legality(GLOBAL, HOST)


# ---------------------------------------------------------------------------
# check_unit behavior


def test_diagnostics_are_ordered_and_deterministic():
    src = """struct H { __host__ void call() {} };
struct D { __device__ void call() {} };
__device__ void z() { H{}.call(); }
void a() { D{}.call(); }
void b() { gone(); D{}.call(); }
"""
    first = check_unit(src, "o.mcu")
    second = check_unit(src, "o.mcu")
    assert [(d.code, d.loc, d.message) for d in first] == [
        (d.code, d.loc, d.message) for d in second
    ]
    keys = [(d.loc.file, d.loc.line, d.loc.col, d.code) for d in first]
    assert keys == sorted(keys)
    assert {d.code for d in first} == {"E1002", "E1001", "E0101"}


def test_check_aggregates_instead_of_stopping():
    src = """struct D { __device__ void call() {} };
void a() { D{}.call(); }
void b() { D{}.call(); }
"""
    assert [c for c, _ in codes(src)] == ["E1001", "E1001"]


def test_suppression_is_monotone_and_warning_only():
    with_pragma = """struct S { static void value() {} };
#pragma hd_warning_disable
template< typename T >
__host__ __device__
void func() { T::value(); }
int main() { func< S >(); }
"""
    without = with_pragma.replace("#pragma hd_warning_disable\n", "")
    suppressed = check_unit(with_pragma, "p.mcu")
    plain = check_unit(without, "p.mcu")
    assert {(d.code, d.message) for d in suppressed} <= {
        (d.code, d.message) for d in plain
    }
    diff = [d for d in plain if (d.code, d.message) not in
            {(s.code, s.message) for s in suppressed}]
    assert diff and all(d.severity is Severity.WARNING for d in diff)


def test_suppressed_diagnostics_are_marked_and_omitted():
    src = """struct S { static void value() {} };
#pragma nv_exec_check_disable
template< typename T >
__host__ __device__
void func() { T::value(); }
int main() { func< S >(); }
"""
    analysis = analyze(src, "s.mcu")
    assert analysis.diagnostics == []
    hidden = [d for d in analysis.all_diagnostics if d.suppressed]
    assert [d.code for d in hidden] == ["W1101"]


def test_suppression_does_not_reach_callees():
    src = """struct S { static void value() {} };
template< typename T >
__host__ __device__
void inner() { T::value(); }
#pragma hd_warning_disable
template< typename T >
__host__ __device__
void outer() { inner< T >(); }
int main() { outer< S >(); }
"""
    assert [c for c, _ in codes(src)] == ["W1101"]


def test_errors_are_never_suppressed():
    src = """struct D { __device__ void call() {} };
#pragma hd_warning_disable
void f() { D{}.call(); }
"""
    assert [c for c, _ in codes(src)] == ["E1001"]


def test_relaxed_constexpr_is_monotone():
    src = """struct S {
  constexpr static int value() { return 42; }
};
template< typename T >
__global__
void kernel( T t ) {
  printf( "%d", t.value() );
}
int main() {
  kernel<<< 1, 1 >>>( S{} );
  return cudaDeviceSynchronize();
}
"""
    strict = check_unit(src, "r.mcu", NVCC)
    relaxed = check_unit(src, "r.mcu", CompileProfile(relaxed_constexpr=True))
    assert relaxed == []
    assert [d.code for d in strict] == ["E1002"]


def test_unreachable_mismatch_stays_a_warning_in_sound_mode():
    src = """struct D { __device__ void call() {} };
__host__ __device__ void g() { D{}.call(); }
"""
    assert codes(src, Mode.SOUND) == [("W1102", 2)]
    called = src + "int main() { g(); return 0; }\n"
    assert codes(called, Mode.SOUND) == [("E1102", 2)]


def test_kernel_reachability_promotes_in_sound_mode():
    src = """struct H { __host__ void call() {} };
__host__ __device__ void g() { H{}.call(); }
__global__ void k() { g(); }
"""
    # the kernel is never launched: the device mismatch stays a warning
    assert codes(src, Mode.SOUND) == [("W1101", 2)]
    launched = src + "int main() { k<<< 1, 1 >>>(); return 0; }\n"
    assert codes(launched, Mode.SOUND) == [("E1101", 2)]


def test_fidelity_fixture_match_on_the_running_example():
    base = """struct H {
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
  return wrap< %s >();
}
"""
    host_variant = check_unit(base % "H", "t.mcu", NVCC, Mode.FIDELITY)
    assert [d.code for d in host_variant] == ["W1101"]
    assert "is not allowed" in host_variant[0].message
    assert check_unit(base % "D", "t.mcu", NVCC, Mode.FIDELITY) == []


def test_member_template_default_reads_a_member_constant():
    src = """template< HDC x >
struct S1 {
  static constexpr HDC hdc = x;
  template< HDC hdc_ = hdc >
  requires( hdc_ == HDC::Hst )
  __host__ void call() {}
  template< HDC hdc_ = hdc >
  requires( hdc_ == HDC::Dev )
  __device__ void call() {}
  template< HDC hdc_ = hdc >
  requires( hdc_ == HDC::HstDev )
  __host__ __device__ void call() {}
};
void g1() {
  S1< HDC::Hst > s;
  s.call();
}
__device__ void g1dev() {
  S1< HDC::Dev > s;
  s.call();
}
"""
    assert check_unit(src, "m1.mcu") == []


def test_divergent_signature_of_guarded_function():
    src = """#ifdef __CUDA_ARCH__
__device__ void only_device_pass() {}
#endif
"""
    sound = check_unit(src, "u.mcu", NVCC, Mode.SOUND)
    assert [d.code for d in sound] == ["E1201"]
    assert "must not depend" in sound[0].message
    assert codes(src, Mode.FIDELITY) == []
    assert codes(src, Mode.CLASSIC) == []


def test_body_only_directives_do_not_diverge():
    src = """__host__ __device__
void ra( bool flag ) {
  if( !flag ) {
    #ifdef __CUDA_ARCH__
    __trap();
    #else
    std::abort();
    #endif
  }
}
int main() { ra( true ); return 0; }
"""
    for mode in Mode:
        assert codes(src, mode) == []


def test_template_demand_inside_guarded_branch_diverges():
    src = """struct S {};
template< typename T > __host__ __device__ void w() { T{}; }
__host__ __device__ void g() {
  #ifdef __CUDA_ARCH__
  w< S >();
  #endif
}
int main() { g(); return 0; }
"""
    assert [c for c, _ in codes(src, Mode.SOUND)] == ["E1201"]


def test_proposal2_overloads_by_space():
    src = """__host__ void f() {}
__device__ void f() {}
__host__ __device__ void g() {
  f();
}
int main() { g(); return 0; }
"""
    assert codes(src, Mode.PROPOSAL2) == []
    # outside the propagation mode the pair is one definition too many;
    # recovery keeps the first f, so g's device side also warns
    classic = [c for c, _ in codes(src, Mode.CLASSIC)]
    assert classic[0] == "E0102"
    assert "E1302" not in classic


def test_proposal2_one_sided_stray_is_always_an_error():
    src = """__host__ struct H { void call() {} };
__global__ void k() { H{}.call(); }
"""
    assert [c for c, _ in codes(src, Mode.PROPOSAL2)] == ["E1501"]


def test_launch_rules():
    src = """__global__ void k() {}
__device__ void d() { k<<< 1, 1 >>>(); }
int main() { k(); return 0; }
"""
    got = codes(src)
    assert [c for c, _ in got] == ["E1003", "E1004"]
    non_global = "void f() {}\nint main() { f<<< 1, 1 >>>(); return 0; }\n"
    assert [c for c, _ in codes(non_global)] == ["E1004"]


def test_fidelity_still_reports_host_pass_hard_errors():
    src = """int main() {
  #ifndef __CUDA_ARCH__
  gone();
  #endif
}
"""
    assert [c for c, _ in codes(src, Mode.FIDELITY)] == ["E0101"]


def test_fidelity_drops_host_pass_space_errors():
    src = """struct D { __device__ void call() {} };
int main() {
  #ifndef __CUDA_ARCH__
  D{}.call();
  #endif
}
"""
    assert codes(src, Mode.FIDELITY) == []
    assert [c for c, _ in codes(src, Mode.CLASSIC)] == ["E1001"]


def test_plain_profile_erase_checks_single_pass():
    src = """__host__ __device__ void f() {}
int main() { f(); return 0; }
"""
    plain = CompileProfile("plain", erase_specifiers=True)
    assert check_unit(src, "p.mcu", plain) == []
    launch = """__global__ void k() {}
int main() { k<<< 1, 1 >>>(); return 0; }
"""
    assert [c for c, _ in codes(launch, profile=plain)] == ["E1004"]
    api = "int main() { return cudaDeviceSynchronize(); }\n"
    assert [c for c, _ in codes(api, profile=plain)] == ["E0101"]


def test_plain_profile_without_erasure_rejects_specifiers():
    plain = CompileProfile("plain")
    src = "__device__ void f() {}\n"
    assert [c for c, _ in codes(src, profile=plain)] == ["E0001"]


def test_e0001_diagnostic_from_parse_error():
    got = codes("void f( {}\n")
    assert got and all(c == "E0001" for c, _ in got)


def test_e0002_diagnostic_from_preprocessor():
    got = codes('#error "boom"\n')
    assert [c for c, _ in got] == ["E0002"]
