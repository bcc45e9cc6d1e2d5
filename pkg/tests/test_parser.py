import itertools

import pytest

from exspace.syntax import nodes as n
from exspace.syntax.parser import ParseError, parse
from exspace.syntax.preprocess import CompileProfile, preprocess
from exspace.syntax import unparse

KERNEL_UNIT = """__device__ void print() {
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


def prep(text: str) -> str:
    return preprocess(text, CompileProfile().passes()[0])


def test_kernel_unit_shape():
    ast = parse(prep(KERNEL_UNIT), "k.mcu")
    names = [it.name for it in ast.items]
    assert names == ["print", "kernel", "main"]
    assert ast.has_main
    kernel = ast.items[1]
    assert kernel.spec.global_
    assert not kernel.spec.host and not kernel.spec.device
    assert isinstance(kernel.body[0], n.ForStmt)
    launch = ast.items[2].body[0]
    assert isinstance(launch, n.LaunchStmt)
    assert launch.grid == n.IntLit(4)
    assert launch.block == n.IntLit(3)


def test_empty_unit():
    ast = parse("", "e.mcu")
    assert ast.items == []
    assert not ast.has_main


# Oracle: enumerate every subset of the three specifiers; the valid ones
# are {}, {H}, {D}, {H,D}, and {G}.
_VALID = [(), ("__host__",), ("__device__",), ("__host__", "__device__"), ("__global__",)]


@pytest.mark.parametrize(
    "combo",
    [c for k in range(4) for c in itertools.combinations(
        ("__host__", "__device__", "__global__"), k)],
)
def test_specifier_combination_table(combo):
    ret = "void" if "__global__" in combo else "int"
    body = "{}" if ret == "void" else "{ return 0; }"
    src = f"{' '.join(combo)} {ret} f() {body}\n"
    if combo in _VALID:
        parse(src, "s.mcu")
    else:
        with pytest.raises(ParseError):
            parse(src, "s.mcu")


def test_global_host_combination_is_rejected():
    with pytest.raises(ParseError):
        parse("__global__ __host__ void f(){}", "g.mcu")


def test_global_must_return_void():
    with pytest.raises(ParseError):
        parse("__global__ int f(){ return 0; }", "g.mcu")


def test_main_constraints():
    with pytest.raises(ParseError):
        parse("__device__ int main() { return 0; }", "m.mcu")
    with pytest.raises(ParseError):
        parse("void main() {}", "m.mcu")
    with pytest.raises(ParseError):
        parse("template< typename T > int main() { return 0; }", "m.mcu")


def test_round_trip_through_canonical_printer():
    fixtures = [
        KERNEL_UNIT,
        """struct D {
  static constexpr HDC hdc = HDC::Dev;
  __device__ int call() { return 2; }
};
#pragma hd_warning_disable
template< typename T, HDC h = hdc<T> >
requires( h == HDC::Dev )
__device__ void f( T t ) { t.call(); }
__global__ void kern( int N ) {
  for( int i = 0; i < N; ++i ) {
    f( D{} );
  }
  if( cuda_arch ) {
    printf( "%d", 1 );
  } else {
    release_assert( true );
  }
}
int main() {
  kern<<< 2, 2 >>>( 3 );
  return cudaDeviceSynchronize();
}
""",
        """enum class HDC { Hst, Dev, HstDev };
static_assert( hdc<S> == HDC::Hst || true );
struct S {};
template< typename T >
__host__( hdc<T> == HDC::Hst )
__device__( !(hdc<T> == HDC::Hst) )
void wrap() { T{}.call(); }
""",
    ]
    for src in fixtures:
        first = parse(prep(src), "r.mcu")
        printed = unparse(first)
        second = parse(prep(printed), "r.mcu")
        assert first == second
        assert unparse(second) == printed


def test_member_constant_forms():
    ast = parse("struct D { static constexpr HDC hdc = HDC::Dev; };", "m.mcu")
    mv = ast.items[0].member_vars()[0]
    assert mv.type_name == "HDC"
    assert mv.value == n.HdcLit("Dev")
    # both keyword orders are accepted
    parse("struct B { constexpr static bool hdc = true; };", "m.mcu")
    with pytest.raises(ParseError):
        parse("struct X { HDC hdc = HDC::Dev; };", "m.mcu")


def test_struct_templates_take_hdc_parameters_only():
    parse("template< HDC x > struct S { };", "t.mcu")
    with pytest.raises(ParseError):
        parse("template< typename T > struct S { };", "t.mcu")


def test_one_type_and_one_hdc_parameter_at_most():
    with pytest.raises(ParseError):
        parse("template< typename T, typename U > void f() {}", "t.mcu")
    with pytest.raises(ParseError):
        parse("template< HDC a, HDC b > void f() {}", "t.mcu")
    parse("template< typename T, HDC h = hdc<T> > void f() {}", "t.mcu")


def test_requires_clause_needs_template():
    with pytest.raises(ParseError):
        parse("requires( true ) void f() {}", "r.mcu")


def test_printf_format_subset():
    parse('void f() { printf( "hi" ); }', "p.mcu")
    parse('void f() { printf( "%d", 1 ); }', "p.mcu")
    with pytest.raises(ParseError):
        parse('void f() { printf( "%s", 1 ); }', "p.mcu")
    with pytest.raises(ParseError):
        parse('void f() { printf( "%d" ); }', "p.mcu")
    with pytest.raises(ParseError):
        parse('void f() { printf( "%d%d", 1, 2 ); }', "p.mcu")
    with pytest.raises(ParseError):
        parse("void f() { printf( 1 ); }", "p.mcu")


def test_builtin_arity_is_checked():
    with pytest.raises(ParseError):
        parse("void f() { release_assert(); }", "b.mcu")
    with pytest.raises(ParseError):
        parse("void f() { cudaDeviceSynchronize( 1 ); }", "b.mcu")


def test_pragma_attaches_to_next_function():
    ast = parse("#pragma hd_warning_disable\nvoid f() {}", "p.mcu")
    assert ast.items[0].spec.pragma == "hd_warning_disable"
    with pytest.raises(ParseError):
        parse("#pragma hd_warning_disable\nstruct S {};", "p.mcu")
    with pytest.raises(ParseError):
        parse("#pragma something_else\nvoid f() {}", "p.mcu")


def test_enum_declaration_must_be_canonical():
    parse("enum class HDC { Hst, Dev, HstDev };", "e.mcu")
    with pytest.raises(ParseError):
        parse("enum class HDC { Hst, Dev };", "e.mcu")
    with pytest.raises(ParseError):
        parse("enum class Other { A };", "e.mcu")


def test_erase_mode_discards_specifiers():
    src = "__host__ __device__ void f( int x ) {}"
    ast = parse(src, "e.mcu", specifier_mode="erase")
    assert ast.items[0].spec.undecorated
    ast2 = parse("template< typename T > __host__( hdc<T> == HDC::Hst ) void g() {}",
                 "e.mcu", specifier_mode="erase")
    assert ast2.items[0].spec.undecorated


def test_reject_mode_errors_on_specifiers():
    with pytest.raises(ParseError) as exc:
        parse("__device__ void f() {}", "r.mcu", specifier_mode="reject")
    assert "not recognized" in exc.value.message


def test_launch_with_explicit_template_arguments():
    ast = parse("__global__ void k() {}\nint main() { k<<< 1, 1 >>>(); return 0; }", "l.mcu")
    launch = ast.items[1].body[0]
    assert isinstance(launch, n.LaunchStmt)
    src = "template< typename T > __global__ void k( T t ) {}\nstruct S {};\nint main() { k< S ><<< 1, 2 >>>( S{} ); return 0; }"
    launch = parse(src, "l.mcu").items[2].body[0]
    assert isinstance(launch, n.LaunchStmt)
    assert launch.targs and launch.targs[0].name == "S"


def test_variable_declaration_of_struct_template():
    src = "template< HDC x > struct S1d {};\n__device__ void g() { S1d< HDC::Dev > v; }"
    ast = parse(src, "v.mcu")
    stmt = ast.items[1].body[0]
    assert isinstance(stmt, n.VarDeclStmt)
    assert stmt.type.name == "S1d"
    assert stmt.type.targs == [n.HdcLit("Dev")]


def test_qualified_std_abort_call():
    ast = parse("void f() { std::abort(); }", "q.mcu")
    call = ast.items[0].body[0].expr
    assert isinstance(call, n.CallExpr)
    assert call.name == "std::abort"


def test_parse_error_reports_expected_token():
    with pytest.raises(ParseError) as exc:
        parse("struct S { void f() {}\n", "x.mcu")
    assert "expected" in exc.value.message
    assert exc.value.loc.line == 2
