"""Execution-space checking over all reachable instantiations.

Two analyses run per unit, one per preprocessing pass.  Each analysis has a
native side (host or device): bodies come from that pass's text, and
mismatches inside host-device callers are attributed to the analysis whose
native side contains them.  That split reproduces the real two-step
compilation: host-side bodies are what the host compiler sees, device-side
bodies what the device front end sees.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .diagnostics import Diagnostic, SrcLoc, finish_diagnostics
from .sema import (  # evaluate_conditional_spec is re-exported from here
    BOTH_SIDES,
    DEVICE,
    GLOBAL,
    HOST,
    HOST_ONLY,
    ExecSpace,
    OverloadError,
    Selected,
    SemaError,
    SubstFailure,
    SymbolTable,
    TraitConfig,
    Type,
    builtin_spaces,
    declared_spaces,
    effective_spaces,
    evaluate_conditional_spec,
    resolve,
    resolve_overload,
    resolve_type,
    signature_key,
    struct_bindings,
)
from .syntax import nodes as n
from .syntax.parser import ParseError, parse
from .syntax.preprocess import (
    DEVICE_PASS,
    HOST_PASS,
    CompileProfile,
    PreprocessorError,
    preprocess,
)


class Mode(Enum):
    CLASSIC = "classic"
    FIDELITY = "fidelity"
    SOUND = "sound"
    PROPOSAL1 = "proposal1"
    PROPOSAL2 = "proposal2"


# Modes replicating the real compiler's habit of instantiating both sides
# of a host-device template whenever it is called.
_NVCC_INSTANTIATION = (Mode.CLASSIC, Mode.FIDELITY, Mode.PROPOSAL1)
_DIVERGENCE_MODES = (Mode.SOUND, Mode.PROPOSAL1, Mode.PROPOSAL2)

# Codes the plain host compiler can produce; everything space-related is
# invisible to it, which is what the fidelity mode replicates.
_HARD_CODES = frozenset(
    {"E0001", "E0002", "E0101", "E0102", "E0103", "E0104", "E1301", "E1302"}
)


@dataclass(frozen=True)
class Verdict:
    kind: str  # ok | warn | error
    code: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.kind == "ok"


_OK = Verdict("ok")


def legality(
    caller_side: ExecSpace,
    callee_space: ExecSpace,
    kind: str = "direct",
    *,
    caller_from_hd: bool = False,
    relaxed_constexpr: bool = False,
    callee_is_constexpr: bool = False,
    mode: Mode = Mode.CLASSIC,
    mismatched_side_reachable: bool = True,
) -> Verdict:
    """The call-legality matrix; total over every argument combination.

    caller_side is the side the call occurs on (host-device callers are
    checked once per side, with caller_from_hd set).  Launches are legal
    only host-to-global.  The relaxed-constexpr flag makes constexpr
    callees callable from either side.
    """
    if caller_side not in (HOST, DEVICE):
        raise ValueError("the caller side must be host or device")
    if kind == "launch":
        if caller_side is DEVICE:
            return Verdict("error", "E1003")
        if callee_space is not ExecSpace.Global:
            return Verdict("error", "E1004")
        return _OK
    if callee_space is ExecSpace.Global:
        return Verdict("error", "E1004")
    if relaxed_constexpr and callee_is_constexpr:
        return _OK
    if callee_space is ExecSpace.HostDevice or callee_space is caller_side:
        return _OK
    # A one-sided callee on the mismatched side.
    if not caller_from_hd:
        if mode is Mode.PROPOSAL2:
            return Verdict("error", "E1501")
        return Verdict("error", "E1001" if caller_side is HOST else "E1002")
    host_only_callee = callee_space is HOST
    if mode is Mode.FIDELITY and not host_only_callee:
        return _OK  # replicated inconsistency: no warning for this direction
    if mode is Mode.SOUND and mismatched_side_reachable:
        return Verdict("error", "E1101" if host_only_callee else "E1102")
    if mode is Mode.PROPOSAL2:
        if mismatched_side_reachable:
            return Verdict("error", "E1501")
        return Verdict("warn", "W1502")
    return Verdict("warn", "W1101" if host_only_callee else "W1102")


def _space_of(spaces) -> ExecSpace:
    if spaces == BOTH_SIDES:
        return ExecSpace.HostDevice
    if spaces == HOST_ONLY:
        return HOST
    return DEVICE


_SIDE_WORD = {HOST: "host", DEVICE: "device"}


def _stray_message(code: str, callee_space: ExecSpace) -> str:
    callee_word = _SIDE_WORD.get(callee_space, "host device")
    if code == "E1001":
        return "calling a device function from a host function is not allowed"
    if code == "E1002":
        return "calling a host function from a device function is not allowed"
    if code in ("W1101", "W1102"):
        return f"calling a {callee_word} function from a host device function is not allowed"
    if code == "E1101":
        return (
            "calling a host function from a host device function is not allowed; "
            "the device path is reachable from a kernel launch"
        )
    if code == "E1102":
        return (
            "calling a device function from a host device function is not allowed; "
            "the host path is reachable from main"
        )
    if code == "W1502":
        return f"calling a {callee_word} function from a host device function"
    raise ValueError(code)


def _e1501_message(caller_side: ExecSpace, callee_space: ExecSpace, from_hd: bool) -> str:
    callee_word = _SIDE_WORD.get(callee_space, "host device")
    if from_hd:
        return (
            f"stray call: calling a {callee_word} function from a host device "
            f"function on a reachable {_SIDE_WORD[caller_side]} path"
        )
    return f"stray call: calling a {callee_word} function from {_SIDE_WORD[caller_side]} code"


# --------------------------------------------------------------------------
# Instances


@dataclass
class Instance:
    decl: n.FunctionDecl
    bindings: dict
    side: ExecSpace
    spaces: object  # frozenset of sides, or GLOBAL
    owner_struct: Optional[n.StructDecl]
    owner_bindings: dict
    owner_type: Optional[Type]
    key: tuple
    demand_key: tuple
    first_loc: SrcLoc

    def display(self) -> str:
        name = self.decl.display_name()
        if self.owner_type is not None and self.owner_type.targs:
            name = f"{self.owner_type.display()}::{self.decl.name}"
        if self.bindings:
            args = ", ".join(
                v.display() if isinstance(v, Type) else v.value
                for _, v in sorted(self.bindings.items())
            )
            name = f"{name}<{args}>"
        return name

    @property
    def from_hd(self) -> bool:
        return self.spaces != GLOBAL and len(self.spaces) == 2


@dataclass
class _Pending:
    caller: Instance
    callee_space: ExecSpace
    loc: SrcLoc


def _bindings_key(bindings: dict) -> tuple:
    return tuple(sorted(bindings.items(), key=lambda kv: kv[0]))


class _Walk:
    """One analysis over one pass's text, attributed to a native side."""

    def __init__(self, ast: n.Ast, table: SymbolTable, native_side: ExecSpace,
                 mode: Mode, profile: CompileProfile, cfg: TraitConfig):
        self.ast = ast
        self.table = table
        self.native = native_side
        self.mode = mode
        self.profile = profile
        self.cfg = cfg
        self.diags: list[Diagnostic] = []
        self.pending: list[_Pending] = []
        self.instances: dict[tuple, Instance] = {}
        self.queue: deque = deque()
        self.demands: dict[tuple, tuple] = {}  # key -> (display, loc)
        self.edges: dict[tuple, list] = {}
        self.launch_seeds: list[tuple] = []
        self.main_key: Optional[tuple] = None

    # -- diagnostics helpers -------------------------------------------------

    def _emit(self, code: str, loc: SrcLoc, message: str):
        self.diags.append(Diagnostic.make(code, loc, message))

    def _emit_sema(self, err: SemaError):
        self.diags.append(err.diagnostic())

    # -- entry ----------------------------------------------------------------

    def run(self):
        for decl, owner in self._all_decls():
            key = ("decl", signature_key(decl, self.mode is Mode.PROPOSAL2))
            self.demands.setdefault(key, (decl.display_name(), decl.loc))
        self._seed_roots()
        while self.queue:
            inst = self.queue.popleft()
            self._walk_instance(inst)
        self._resolve_pending()

    def _all_decls(self):
        for item in self.ast.items:
            if isinstance(item, n.FunctionDecl):
                yield item, None
            elif isinstance(item, n.StructDecl):
                for m in item.member_functions():
                    yield m, item

    def _seed_roots(self):
        for decl, owner in self._all_decls():
            if decl.is_template or (owner is not None and owner.tparams):
                continue
            if decl.body is None:
                continue
            if self.mode is Mode.PROPOSAL2 and not self._p2_rooted(decl, owner):
                continue
            owner_type = Type(owner.name) if owner is not None else None
            sides = self._root_sides(decl, owner)
            for side in sides:
                self._instantiate(decl, {}, side, owner, {}, owner_type, decl.loc)

    def _p2_rooted(self, decl: n.FunctionDecl, owner) -> bool:
        # Undecorated callables behave like templates under propagation:
        # they are instantiated on demand, in the calling space.
        if decl.name == "main" and owner is None:
            return True
        if not decl.spec.undecorated:
            return True
        return owner is not None and not owner.spec.undecorated

    def _root_sides(self, decl: n.FunctionDecl, owner) -> list:
        if decl.spec.global_:
            return [DEVICE]
        try:
            spaces = effective_spaces(
                decl, {}, self.mode, HOST, self.table, self.cfg, decl.loc,
                owner_struct=owner,
            )
        except SemaError as e:
            self._emit_sema(e)
            return []
        except SubstFailure:
            self._emit("E0001", decl.loc, "specifier predicate is not a constant")
            return []
        return [s for s in (HOST, DEVICE) if s in spaces]

    # -- instantiation ---------------------------------------------------------

    def _instantiate(
        self,
        decl: n.FunctionDecl,
        bindings: dict,
        side: ExecSpace,
        owner_struct,
        owner_bindings: dict,
        owner_type: Optional[Type],
        at_loc: SrcLoc,
    ) -> Optional[Instance]:
        merged = {**owner_bindings, **bindings}
        try:
            spaces = effective_spaces(
                decl, merged, self.mode, side, self.table, self.cfg, at_loc,
                owner_struct=owner_struct,
            )
        except SemaError as e:
            self._emit_sema(e)
            return None
        except SubstFailure:
            self._emit("E0001", at_loc, "specifier predicate is not a constant")
            return None
        sig = signature_key(decl, self.mode is Mode.PROPOSAL2)
        owner_key = owner_type if owner_type is not None else None
        demand_key = ("inst", sig, _bindings_key(bindings), owner_key)
        key = demand_key + (side,)
        if key in self.instances:
            return self.instances[key]
        inst = Instance(
            decl, bindings, side, spaces, owner_struct, owner_bindings,
            owner_type, key, demand_key, at_loc,
        )
        self.instances[key] = inst
        if decl.is_template or owner_type is not None:
            self.demands.setdefault(demand_key, (inst.display(), at_loc))
        if decl.name == "main" and decl.owner is None:
            self.main_key = key
        if decl.body is not None:
            self.queue.append(inst)
        return inst

    # -- body walking ------------------------------------------------------------

    def _walk_instance(self, inst: Instance):
        env = dict(inst.owner_bindings)
        env.update(inst.bindings)
        locals_: dict[str, Optional[Type]] = {}
        for p in inst.decl.params:
            locals_[p.name] = self._resolve_type_soft(p.type, env, p.loc)
        self._walk_stmts(inst, inst.decl.body, env, locals_)

    def _resolve_type_soft(self, tref: n.TypeRef, env, loc) -> Optional[Type]:
        try:
            return resolve_type(tref, env, self.table)
        except SemaError as e:
            self._emit_sema(e)
        except SubstFailure:
            self._emit("E0101", loc, f'"{tref.name}" does not name a type here')
        return None

    def _walk_stmts(self, inst, stmts, env, locals_):
        for s in stmts:
            if isinstance(s, n.ExprStmt):
                self._walk_expr(inst, s.expr, env, locals_)
            elif isinstance(s, n.ReturnStmt):
                if s.expr is not None:
                    self._walk_expr(inst, s.expr, env, locals_)
            elif isinstance(s, n.VarDeclStmt):
                locals_[s.name] = self._resolve_type_soft(s.type, env, s.loc)
            elif isinstance(s, n.IfStmt):
                self._walk_expr(inst, s.cond, env, locals_)
                self._walk_stmts(inst, s.then, env, dict(locals_))
                if s.orelse is not None:
                    self._walk_stmts(inst, s.orelse, env, dict(locals_))
            elif isinstance(s, n.ForStmt):
                self._walk_expr(inst, s.init, env, locals_)
                self._walk_expr(inst, s.bound, env, locals_)
                inner = dict(locals_)
                inner[s.var] = Type("int")
                self._walk_stmts(inst, s.body, env, inner)
            elif isinstance(s, n.LaunchStmt):
                self._walk_launch(inst, s, env, locals_)

    def _walk_launch(self, inst, s: n.LaunchStmt, env, locals_):
        self._walk_expr(inst, s.grid, env, locals_)
        self._walk_expr(inst, s.block, env, locals_)
        arg_types = [self._walk_expr(inst, a, env, locals_) for a in s.args]
        if inst.side is DEVICE:
            self._emit("E1003", s.loc, "a kernel launch is not allowed from device code")
        candidates = self.table.overloads(s.name)
        if not candidates:
            return  # E0101 was already reported by resolve
        sel = self._select(s.name, candidates, s.targs, arg_types, s.loc, env,
                           context_side=DEVICE)
        if sel is None:
            return
        if not sel.decl.spec.global_:
            self._emit(
                "E1004", s.loc, "only __global__ functions can be launched with <<< >>>"
            )
            return
        target = self._instantiate(sel.decl, sel.bindings, DEVICE, None, {}, None, s.loc)
        if target is not None and inst.side is HOST:
            self.launch_seeds.append(target.key)

    def _select(self, name, candidates, targs, arg_types, loc, env, *,
                context_side, owner_struct=None, owner_bindings=None,
                owner_type=None) -> Optional[Selected]:
        try:
            return resolve_overload(
                name, candidates, targs, arg_types, loc,
                env=env, table=self.table, cfg=self.cfg, mode=self.mode,
                context_side=context_side, owner_struct=owner_struct,
                owner_bindings=owner_bindings, owner_type=owner_type,
            )
        except OverloadError as e:
            self._emit_sema(e)
        except SemaError as e:
            self._emit_sema(e)
        except SubstFailure:
            self._emit("E1301", loc, f'no viable candidate for call to "{name}"')
        return None

    def _walk_expr(self, inst, e, env, locals_) -> Optional[Type]:
        if isinstance(e, n.IntLit):
            return Type("int")
        if isinstance(e, (n.BoolLit, n.CudaArchRef)):
            return Type("bool")
        if isinstance(e, (n.StringLit, n.HdcLit)):
            return None
        if isinstance(e, n.NameRef):
            if e.name in locals_:
                return locals_[e.name]
            if e.name in env:
                return None  # an HDC parameter used as a value
            self._emit("E0101", e.loc, f'undefined name "{e.name}"')
            return None
        if isinstance(e, n.TempObj):
            return self._resolve_type_soft(e.type, env, e.loc)
        if isinstance(e, n.HdcTrait):
            try:
                t = resolve_type(e.type, env, self.table)
                from .sema import compute_hdc

                compute_hdc(t, self.table, self.cfg)
            except SemaError as err:
                self._emit_sema(err)
            except SubstFailure:
                pass
            return None
        if isinstance(e, n.MemberConst):
            from .sema import eval_const_expr

            try:
                eval_const_expr(e, env, self.table, self.cfg)
            except SemaError as err:
                self._emit_sema(err)
            except SubstFailure as sf:
                self._emit("E0101", e.loc, str(sf) or "unresolved member constant")
            return None
        if isinstance(e, n.UnaryExpr):
            self._walk_expr(inst, e.operand, env, locals_)
            return Type("bool")
        if isinstance(e, n.BinaryExpr):
            self._walk_expr(inst, e.lhs, env, locals_)
            self._walk_expr(inst, e.rhs, env, locals_)
            return Type("bool")
        if isinstance(e, n.CallExpr):
            return self._walk_free_call(inst, e, env, locals_)
        if isinstance(e, n.MemberCallExpr):
            return self._walk_member_call(inst, e, env, locals_)
        if isinstance(e, n.StaticCallExpr):
            return self._walk_static_call(inst, e, env, locals_)
        raise TypeError(f"unknown expression {e!r}")

    def _walk_free_call(self, inst, e: n.CallExpr, env, locals_):
        arg_types = [self._walk_expr(inst, a, env, locals_) for a in e.args]
        candidates = self.table.overloads(e.name)
        if not candidates:
            spaces = builtin_spaces(e.name, self.profile)
            if spaces is not None:
                self._check_call(inst, e.loc, spaces, is_constexpr=False,
                                 callee_decl=None)
                return Type("int") if e.name == "cudaDeviceSynchronize" else None
            return None  # E0101 was already reported by resolve
        sel = self._select(e.name, candidates, e.targs, arg_types, e.loc, env,
                           context_side=inst.side)
        if sel is not None:
            self._dispatch(inst, sel, e.loc)
        return None

    def _receiver_type(self, inst, recv, env, locals_) -> Optional[Type]:
        t = self._walk_expr(inst, recv, env, locals_)
        if t is None and not isinstance(recv, (n.TempObj, n.NameRef)):
            self._emit(
                "E0001",
                getattr(recv, "loc", inst.first_loc),
                "a member-call receiver must be a variable or a temporary",
            )
        return t

    def _walk_member_call(self, inst, e: n.MemberCallExpr, env, locals_):
        recv_type = self._receiver_type(inst, e.recv, env, locals_)
        arg_types = [self._walk_expr(inst, a, env, locals_) for a in e.args]
        if recv_type is None:
            return None
        self._member_dispatch(inst, recv_type, e.name, e.targs, arg_types, e.loc, env)
        return None

    def _walk_static_call(self, inst, e: n.StaticCallExpr, env, locals_):
        arg_types = [self._walk_expr(inst, a, env, locals_) for a in e.args]
        t = self._resolve_type_soft(e.type, env, e.loc)
        if t is None:
            return None
        self._member_dispatch(inst, t, e.name, e.targs, arg_types, e.loc, env)
        return None

    def _member_dispatch(self, inst, recv_type: Type, name, targs, arg_types, loc, env):
        struct = self.table.struct(recv_type.name)
        if struct is None:
            self._emit(
                "E0101", loc, f'type "{recv_type.display()}" has no member "{name}"'
            )
            return
        candidates = SymbolTable.member_functions(struct, name)
        if not candidates:
            self._emit(
                "E0101", loc, f'type "{recv_type.display()}" has no member "{name}"'
            )
            return
        owner_bindings = struct_bindings(struct, recv_type)
        sel = self._select(
            f"{recv_type.display()}::{name}", candidates, targs, arg_types, loc,
            env, context_side=inst.side, owner_struct=struct,
            owner_bindings=owner_bindings, owner_type=recv_type,
        )
        if sel is not None:
            self._dispatch(inst, sel, loc, owner_struct=struct,
                           owner_bindings=owner_bindings, owner_type=recv_type)

    # -- call legality and demand --------------------------------------------

    def _dispatch(self, inst, sel: Selected, loc: SrcLoc, *,
                  owner_struct=None, owner_bindings=None, owner_type=None):
        owner_bindings = owner_bindings or {}
        merged = {**owner_bindings, **sel.bindings}
        try:
            spaces = effective_spaces(
                sel.decl, merged, self.mode, inst.side, self.table,
                self.cfg, loc, owner_struct=owner_struct,
            )
        except SemaError as e:
            self._emit_sema(e)
            return
        except SubstFailure:
            self._emit("E0001", loc, "specifier predicate is not a constant")
            return
        if spaces == GLOBAL:
            self._emit(
                "E1004", loc,
                "a __global__ function must be launched with <<< >>>, not called directly",
            )
            return
        relaxed_ok = (
            self.profile.relaxed_constexpr and sel.decl.spec.constexpr
        )
        legal = relaxed_ok or inst.side in spaces
        demanded_side = inst.side if legal else (HOST if HOST in spaces else DEVICE)
        callee = self._instantiate(
            sel.decl, sel.bindings, demanded_side,
            owner_struct, owner_bindings, owner_type, loc,
        )
        if legal and callee is not None:
            self.edges.setdefault(inst.key, []).append(callee.key)
        if not legal:
            self._report_stray(inst, spaces, loc)
        if (
            self.mode in _NVCC_INSTANTIATION
            and spaces == BOTH_SIDES
            and (sel.decl.is_template or owner_type is not None)
        ):
            self._instantiate(
                sel.decl, sel.bindings, self.native, owner_struct,
                owner_bindings, owner_type, loc,
            )

    def _check_call(self, inst, loc, callee_spaces, *, is_constexpr, callee_decl):
        relaxed_ok = self.profile.relaxed_constexpr and is_constexpr
        if relaxed_ok or inst.side in callee_spaces:
            return
        self._report_stray(inst, callee_spaces, loc)

    def _report_stray(self, inst, callee_spaces, loc):
        callee_space = _space_of(callee_spaces)
        if inst.from_hd:
            self.pending.append(_Pending(inst, callee_space, loc))
            return
        v = legality(inst.side, callee_space, mode=self.mode)
        if v.code == "E1501":
            self._emit(v.code, loc, _e1501_message(inst.side, callee_space, False))
        else:
            self._emit(v.code, loc, _stray_message(v.code, callee_space))

    # -- pending warnings, reachability, promotion ------------------------------

    def _reachable(self) -> set:
        seeds = []
        if self.native is HOST:
            if self.main_key is not None:
                seeds.append(self.main_key)
        else:
            seeds.extend(self.launch_seeds)
        seen = set(seeds)
        work = deque(seeds)
        while work:
            key = work.popleft()
            for nxt in self.edges.get(key, ()):  # edges stay on one side
                if nxt not in seen and nxt[-1] is self.native:
                    seen.add(nxt)
                    work.append(nxt)
        return seen

    def _resolve_pending(self):
        reach = self._reachable()
        for pm in self.pending:
            if pm.caller.side is not self.native:
                continue  # the other pass compiles that side
            v = legality(
                pm.caller.side,
                pm.callee_space,
                caller_from_hd=True,
                mode=self.mode,
                mismatched_side_reachable=pm.caller.key in reach,
            )
            if v.ok:
                continue
            if v.code == "E1501":
                msg = _e1501_message(pm.caller.side, pm.callee_space, True)
            else:
                msg = _stray_message(v.code, pm.callee_space)
            d = Diagnostic.make(v.code, pm.loc, msg)
            if not d.is_error and pm.caller.decl.spec.pragma_suppress:
                d.suppressed = True
            self.diags.append(d)


# --------------------------------------------------------------------------
# Unit-level driver


@dataclass
class PassArtifacts:
    text: str
    ast: n.Ast
    table: SymbolTable


@dataclass
class Analysis:
    path: str
    profile: CompileProfile
    mode: Mode
    diagnostics: list  # ordered, suppression applied
    all_diagnostics: list = field(default_factory=list)  # includes suppressed
    passes: dict = field(default_factory=dict)  # pass kind -> PassArtifacts
    walks: dict = field(default_factory=dict)  # native side -> _Walk

    @property
    def has_errors(self) -> bool:
        return any(d.is_error for d in self.diagnostics)


_PASS_SIDE = {HOST_PASS: HOST, DEVICE_PASS: DEVICE}


def analyze(
    text: str,
    path: str = "<unit>",
    profile: CompileProfile = CompileProfile(),
    mode: Mode = Mode.CLASSIC,
    cfg: TraitConfig = TraitConfig(),
) -> Analysis:
    """Preprocess, parse, resolve, and space-check one unit for all passes."""
    diags: list[Diagnostic] = []
    analysis = Analysis(path, profile, mode, [])
    specifier_mode = "keep"
    if profile.compiler == "plain":
        specifier_mode = "erase" if profile.erase_specifiers else "reject"
    for pp in profile.passes():
        try:
            ptext = preprocess(text, pp, path)
        except PreprocessorError as e:
            diags.append(Diagnostic.make("E0002", e.loc, e.message))
            continue
        try:
            ast = parse(ptext, path, specifier_mode)
        except ParseError as e:
            diags.append(Diagnostic.make("E0001", e.loc, e.message))
            continue
        table, rdiags = resolve(ast, profile, mode)
        diags.extend(rdiags)
        analysis.passes[pp.kind] = PassArtifacts(ptext, ast, table)

    for kind, art in analysis.passes.items():
        native = _PASS_SIDE[kind]
        walk = _Walk(art.ast, art.table, native, mode, profile, cfg)
        walk.run()
        analysis.walks[native] = walk
        if mode is Mode.FIDELITY and native is HOST:
            diags.extend(d for d in walk.diags if d.code in _HARD_CODES)
        else:
            diags.extend(walk.diags)

    if (
        mode in _DIVERGENCE_MODES
        and HOST in analysis.walks
        and DEVICE in analysis.walks
    ):
        diags.extend(
            detect_arch_divergence(
                analysis.walks[HOST].demands, analysis.walks[DEVICE].demands
            )
        )

    ordered = finish_diagnostics(diags)
    analysis.all_diagnostics = ordered
    analysis.diagnostics = [d for d in ordered if not d.suppressed]
    return analysis


def check_unit(
    text: str,
    path: str = "<unit>",
    profile: CompileProfile = CompileProfile(),
    mode: Mode = Mode.CLASSIC,
    cfg: TraitConfig = TraitConfig(),
) -> list:
    """The ordered diagnostic list for one unit (suppressed entries omitted)."""
    return analyze(text, path, profile, mode, cfg).diagnostics


def detect_arch_divergence(host_demands: dict, device_demands: dict) -> list:
    """Report every signature or instantiation present in exactly one pass."""
    diags = []
    for key in set(host_demands) ^ set(device_demands):
        display, loc = host_demands.get(key) or device_demands.get(key)
        diags.append(
            Diagnostic.make(
                "E1201",
                loc,
                f'the instantiation of "{display}" must not depend on whether '
                "__CUDA_ARCH__ is defined",
            )
        )
    diags.sort(key=Diagnostic.sort_key)
    return diags


def propagate_spaces(analysis: Analysis) -> dict:
    """Instance display names to effective spaces (the propagation mode)."""
    out = {}
    for walk in analysis.walks.values():
        for inst in walk.instances.values():
            spaces = inst.spaces
            label = "global" if spaces == GLOBAL else frozenset(spaces)
            out.setdefault(inst.display(), set())
            if label == "global":
                out[inst.display()].add(ExecSpace.Global)
            else:
                out[inst.display()].update(label)
    return {k: frozenset(v) for k, v in out.items()}


def struct_member_spaces(struct: n.StructDecl) -> dict:
    """Declared member spaces with struct-level decoration distributed."""
    out = {}
    for m in struct.member_functions():
        spec = m.spec
        if spec.undecorated and not struct.spec.undecorated:
            spec = struct.spec
        out[m.name] = declared_spaces(spec)
    return out
