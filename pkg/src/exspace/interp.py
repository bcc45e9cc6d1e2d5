"""Deterministic execution of checked units.

Host statements run top to bottom; kernel launches run grid*block logical
threads sequentially in thread order.  A trap latches a version-dependent
sticky error that later launches observe.  A dynamically executed stray
call never produces a value: it halts the run with a reserved exit code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .diagnostics import Diagnostic, SrcLoc
from .sema import (
    DEVICE,
    GLOBAL,
    HOST,
    HDC,
    ExecSpace,
    OverloadError,
    SemaError,
    SubstFailure,
    SymbolTable,
    TraitConfig,
    Type,
    builtin_spaces,
    compute_hdc,
    effective_spaces,
    eval_const_expr,
    resolve_overload,
    resolve_type,
    struct_bindings,
)
from .spacecheck import Analysis
from .syntax import nodes as n
from .syntax.preprocess import DEVICE_PASS, HOST_PASS

UB_EXIT = 101
ABORT_EXIT = 134


@dataclass
class Machine:
    sticky_error: int = 0
    out: bytearray = field(default_factory=bytearray)
    exit_status: Optional[int] = None
    side: ExecSpace = HOST
    thread_id: Optional[int] = None


@dataclass
class RunResult:
    exit_code: int
    stdout: bytes
    ub_halt: bool
    notes: list

    def __post_init__(self):
        if self.ub_halt and self.exit_code != UB_EXIT:
            raise ValueError("a UB halt always exits with the reserved code")


@dataclass(frozen=True)
class StructVal:
    """A stateless struct instance; only the type tag matters."""

    type: Type


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Trap(Exception):
    pass


class _Abort(Exception):
    pass


class UbHalt(Exception):
    """A stray call was dynamically executed; no value is produced."""

    def __init__(self, loc: SrcLoc, reason: str):
        super().__init__(f"{loc}: {reason}")
        self.loc = loc
        self.reason = reason


def device_synchronize(m: Machine) -> int:
    """The host-side error check; zero means success."""
    return m.sticky_error


class Interpreter:
    def __init__(self, analysis: Analysis, cfg: TraitConfig = TraitConfig()):
        self.analysis = analysis
        self.profile = analysis.profile
        self.mode = analysis.mode
        self.cfg = cfg
        self.machine = Machine()
        self.notes: list[Diagnostic] = []

    # -- plumbing ---------------------------------------------------------

    def _artifacts(self, side: ExecSpace):
        kind = HOST_PASS if side is HOST else DEVICE_PASS
        art = self.analysis.passes.get(kind)
        if art is None:
            raise UbHalt(
                SrcLoc(self.analysis.path, 1, 1),
                "no compiled code exists for this side",
            )
        return art

    def _table(self) -> SymbolTable:
        return self._artifacts(self.machine.side).table

    # -- entry --------------------------------------------------------------

    def run(self) -> RunResult:
        main = None
        host = self.analysis.passes.get(HOST_PASS)
        if host is not None:
            for decl in host.table.overloads("main"):
                main = decl
        if main is None or main.body is None:
            raise ValueError("the unit has no main function")
        ub = False
        code = 0
        try:
            value = self._exec_function(main, {}, {}, [], main.loc)
            if isinstance(value, bool):
                code = int(value)
            elif isinstance(value, int):
                code = value
        except _Return:
            raise AssertionError("return escaped a function body")
        except _Abort:
            code = ABORT_EXIT
        except _Trap:
            code = ABORT_EXIT
        except UbHalt as u:
            self.notes.append(
                Diagnostic.make(
                    "N0001", u.loc, f"execution halted on a stray call: {u.reason}"
                )
            )
            ub = True
            code = UB_EXIT
        self.machine.exit_status = code
        return RunResult(code, bytes(self.machine.out), ub, self.notes)

    # -- functions ------------------------------------------------------------

    def _exec_function(self, decl, bindings, owner_bindings, args, loc):
        if decl.body is None:
            raise UbHalt(loc, f'"{decl.display_name()}" has no body to execute')
        env = dict(owner_bindings)
        env.update(bindings)
        locals_ = {}
        for p, a in zip(decl.params, args):
            locals_[p.name] = a
        try:
            self._exec_stmts(decl.body, env, locals_)
        except _Return as r:
            return r.value
        return None

    def _exec_stmts(self, stmts, env, locals_):
        for s in stmts:
            self._exec_stmt(s, env, locals_)

    def _exec_stmt(self, s, env, locals_):
        if isinstance(s, n.ExprStmt):
            self._eval(s.expr, env, locals_)
        elif isinstance(s, n.ReturnStmt):
            raise _Return(self._eval(s.expr, env, locals_) if s.expr else None)
        elif isinstance(s, n.VarDeclStmt):
            locals_[s.name] = self._default_value(s.type, env, s.loc)
        elif isinstance(s, n.IfStmt):
            if self._eval(s.cond, env, locals_):
                self._exec_stmts(s.then, env, dict(locals_))
            elif s.orelse is not None:
                self._exec_stmts(s.orelse, env, dict(locals_))
        elif isinstance(s, n.ForStmt):
            v = self._eval(s.init, env, locals_)
            while v < self._eval(s.bound, env, locals_):
                inner = dict(locals_)
                inner[s.var] = v
                self._exec_stmts(s.body, env, inner)
                v += 1
        elif isinstance(s, n.LaunchStmt):
            self.launch_kernel(s, env, locals_)
        else:
            raise TypeError(f"unknown statement {s!r}")

    def _default_value(self, tref, env, loc):
        t = self._resolve_type(tref, env, loc)
        if t.name == "int":
            return 0
        if t.name == "bool":
            return False
        return StructVal(t)

    def _resolve_type(self, tref, env, loc) -> Type:
        try:
            return resolve_type(tref, env, self._table())
        except (SemaError, SubstFailure) as e:
            raise UbHalt(loc, f"unresolvable type: {e}") from None

    # -- kernel launches ---------------------------------------------------------

    def launch_kernel(self, s: n.LaunchStmt, env, locals_):
        m = self.machine
        if m.side is not HOST:
            raise UbHalt(s.loc, "a kernel launch from device code")
        grid = self._eval(s.grid, env, locals_)
        block = self._eval(s.block, env, locals_)
        args = [self._eval(a, env, locals_) for a in s.args]
        if m.sticky_error != 0:
            self.notes.append(
                Diagnostic.make(
                    "N0001",
                    s.loc,
                    f"kernel launch skipped: the device error state is {m.sticky_error}",
                )
            )
            return
        device = self._artifacts(DEVICE)
        candidates = device.table.overloads(s.name)
        if not candidates:
            raise UbHalt(s.loc, f'no kernel named "{s.name}"')
        sel = self._resolve_call(
            s.name, candidates, s.targs, args, s.loc, env, DEVICE, device.table
        )
        if not sel.decl.spec.global_:
            raise UbHalt(s.loc, f'"{s.name}" is not a __global__ function')
        if not isinstance(grid, int) or not isinstance(block, int):
            raise UbHalt(s.loc, "the launch configuration must be integral")
        m.side = DEVICE
        try:
            for tid in range(max(grid, 0) * max(block, 0)):
                m.thread_id = tid
                try:
                    self._exec_function(sel.decl, sel.bindings, {}, args, s.loc)
                except _Trap:
                    m.sticky_error = self.profile.trap_error_code()
                    break  # the trap abandons all remaining threads
        finally:
            m.side = HOST
            m.thread_id = None

    # -- calls ----------------------------------------------------------------------

    def _resolve_call(self, name, candidates, targs, args, loc, env, side, table,
                      owner_struct=None, owner_bindings=None, owner_type=None):
        arg_types = [self._value_type(a) for a in args]
        try:
            return resolve_overload(
                name, candidates, targs, arg_types, loc,
                env=env, table=table, cfg=self.cfg, mode=self.mode,
                context_side=side, owner_struct=owner_struct,
                owner_bindings=owner_bindings, owner_type=owner_type,
            )
        except (OverloadError, SemaError, SubstFailure) as e:
            raise UbHalt(loc, f"unresolvable call: {e}") from None

    @staticmethod
    def _value_type(v) -> Optional[Type]:
        if isinstance(v, bool):
            return Type("bool")
        if isinstance(v, int):
            return Type("int")
        if isinstance(v, StructVal):
            return v.type
        return None

    def _invoke(self, sel, args, loc, owner_struct=None, owner_bindings=None):
        owner_bindings = owner_bindings or {}
        side = self.machine.side
        merged = {**owner_bindings, **sel.bindings}
        try:
            spaces = effective_spaces(
                sel.decl, merged, self.mode, side, self._table(), self.cfg, loc,
                owner_struct=owner_struct,
            )
        except (SemaError, SubstFailure) as e:
            raise UbHalt(loc, f"unresolvable execution space: {e}") from None
        if spaces == GLOBAL:
            raise UbHalt(loc, "a __global__ function was called directly")
        relaxed_ok = self.profile.relaxed_constexpr and sel.decl.spec.constexpr
        if side not in spaces and not relaxed_ok:
            raise UbHalt(
                loc,
                f'"{sel.decl.display_name()}" is not compiled for '
                f"{'host' if side is HOST else 'device'} code",
            )
        return self._exec_function(sel.decl, sel.bindings, owner_bindings, args, loc)

    # -- expression evaluation --------------------------------------------------------

    def _eval(self, e, env, locals_):
        if isinstance(e, n.IntLit):
            return e.value
        if isinstance(e, n.BoolLit):
            return e.value
        if isinstance(e, n.StringLit):
            return e.value
        if isinstance(e, n.HdcLit):
            return HDC[e.value]
        if isinstance(e, n.CudaArchRef):
            return self.machine.side is DEVICE
        if isinstance(e, n.NameRef):
            if e.name in locals_:
                return locals_[e.name]
            if e.name in env and not isinstance(env[e.name], Type):
                return env[e.name]
            raise UbHalt(e.loc, f'undefined name "{e.name}"')
        if isinstance(e, n.TempObj):
            return StructVal(self._resolve_type(e.type, env, e.loc))
        if isinstance(e, n.HdcTrait):
            t = self._resolve_type(e.type, env, e.loc)
            try:
                return compute_hdc(t, self._table(), self.cfg)
            except (SemaError, SubstFailure) as err:
                raise UbHalt(e.loc, str(err)) from None
        if isinstance(e, n.MemberConst):
            try:
                return eval_const_expr(e, env, self._table(), self.cfg)
            except (SemaError, SubstFailure) as err:
                raise UbHalt(e.loc, str(err)) from None
        if isinstance(e, n.UnaryExpr):
            return not self._eval(e.operand, env, locals_)
        if isinstance(e, n.BinaryExpr):
            lhs = self._eval(e.lhs, env, locals_)
            if e.op == "&&":
                return bool(lhs) and bool(self._eval(e.rhs, env, locals_))
            if e.op == "||":
                return bool(lhs) or bool(self._eval(e.rhs, env, locals_))
            rhs = self._eval(e.rhs, env, locals_)
            if e.op == "==":
                return lhs == rhs
            if e.op == "!=":
                return lhs != rhs
            if e.op == "<":
                return lhs < rhs
        if isinstance(e, n.CallExpr):
            return self._eval_call(e, env, locals_)
        if isinstance(e, n.MemberCallExpr):
            recv = self._eval(e.recv, env, locals_)
            return self._eval_member_call(e, recv, env, locals_)
        if isinstance(e, n.StaticCallExpr):
            t = self._resolve_type(e.type, env, e.loc)
            return self._eval_member_call(e, StructVal(t), env, locals_)
        raise TypeError(f"unknown expression {e!r}")

    def _eval_call(self, e: n.CallExpr, env, locals_):
        table = self._table()
        candidates = table.overloads(e.name)
        if not candidates:
            return self._eval_builtin(e, env, locals_)
        args = [self._eval(a, env, locals_) for a in e.args]
        sel = self._resolve_call(
            e.name, candidates, e.targs, args, e.loc, env, self.machine.side, table
        )
        return self._invoke(sel, args, e.loc)

    def _eval_member_call(self, e, recv, env, locals_):
        if not isinstance(recv, StructVal):
            raise UbHalt(e.loc, "a member call needs a struct value")
        table = self._table()
        struct = table.struct(recv.type.name)
        if struct is None:
            raise UbHalt(e.loc, f'no struct named "{recv.type.name}"')
        candidates = SymbolTable.member_functions(struct, e.name)
        if not candidates:
            raise UbHalt(
                e.loc, f'type "{recv.type.display()}" has no member "{e.name}"'
            )
        args = [self._eval(a, env, locals_) for a in e.args]
        owner_bindings = struct_bindings(struct, recv.type)
        sel = self._resolve_call(
            f"{recv.type.display()}::{e.name}", candidates, e.targs, args, e.loc,
            env, self.machine.side, table,
            owner_struct=struct, owner_bindings=owner_bindings,
            owner_type=recv.type,
        )
        return self._invoke(sel, args, e.loc, owner_struct=struct,
                            owner_bindings=owner_bindings)

    # -- builtins ---------------------------------------------------------------------

    def _eval_builtin(self, e: n.CallExpr, env, locals_):
        m = self.machine
        name = e.name
        spaces = builtin_spaces(name, self.profile)
        if spaces is None:
            raise UbHalt(e.loc, f'undefined name "{name}"')
        args = [self._eval(a, env, locals_) for a in e.args]
        if m.side not in spaces:
            raise UbHalt(
                e.loc,
                f'"{name}" is not available in '
                f"{'host' if m.side is HOST else 'device'} code",
            )
        if name == "printf":
            fmt = args[0]
            if len(args) > 1:
                fmt = fmt.replace("%d", str(int(args[1])), 1)
            m.out.extend(fmt.encode())
            return len(fmt)
        if name == "release_assert":
            self.release_assert(bool(args[0]))
            return None
        if name == "__trap":
            raise _Trap()
        if name in ("abort", "std::abort"):
            raise _Abort()
        if name == "cudaDeviceSynchronize":
            return device_synchronize(m)
        raise AssertionError(f"unhandled builtin {name}")

    def release_assert(self, flag: bool):
        """No-op when true; a device trap or a host abort when false."""
        if flag:
            return
        if self.machine.side is DEVICE:
            raise _Trap()
        raise _Abort()


def run_program(analysis: Analysis, cfg: TraitConfig = TraitConfig()) -> RunResult:
    """Execute a previously analyzed unit and capture its output.

    Callers gate on the check result; running an erroneous unit is allowed
    for exploration, and any dynamically reached stray call becomes a UB
    halt with the reserved exit code rather than an arbitrary value.
    """
    return Interpreter(analysis, cfg).run()
