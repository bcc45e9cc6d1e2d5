"""Name resolution, the compatibility trait, and overload selection."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .diagnostics import Diagnostic, SrcLoc
from .syntax import nodes as n


class HDC(Enum):
    """Host-device compatibility attached to types via a static member."""

    Hst = "Hst"
    Dev = "Dev"
    HstDev = "HstDev"


class ExecSpace(Enum):
    Host = "host"
    Device = "device"
    Global = "global"
    HostDevice = "host device"


HOST = ExecSpace.Host
DEVICE = ExecSpace.Device

Side = ExecSpace  # restricted to HOST/DEVICE where used as a context

HOST_ONLY = frozenset({HOST})
DEVICE_ONLY = frozenset({DEVICE})
BOTH_SIDES = frozenset({HOST, DEVICE})


@dataclass(frozen=True)
class Type:
    """A fully resolved type: builtin or struct with bound HDC arguments."""

    name: str
    targs: tuple = ()

    def display(self) -> str:
        if self.targs:
            return f"{self.name}<{', '.join(a.value for a in self.targs)}>"
        return self.name

    @property
    def is_builtin(self) -> bool:
        return self.name in ("int", "bool", "void")


@dataclass(frozen=True)
class TraitConfig:
    """Configuration of the compatibility trait.

    fundamentals_hstdev makes int/bool report HstDev instead of the
    default Hst.
    """

    fundamentals_hstdev: bool = False


class SemaError(Exception):
    """A hard semantic error carrying a diagnostic code."""

    def __init__(self, code: str, loc: SrcLoc, message: str):
        super().__init__(f"{code} {loc}: {message}")
        self.code = code
        self.loc = loc
        self.message = message

    def diagnostic(self) -> Diagnostic:
        return Diagnostic.make(self.code, self.loc, self.message)


class SubstFailure(Exception):
    """A substitution failure: the candidate is discarded, never diagnosed."""


class OverloadError(SemaError):
    pass


# Builtin callables and the spaces they are usable from.  The plain profile
# lacks the runtime-API entry points.
BUILTIN_FUNCTIONS = {
    "printf": BOTH_SIDES,
    "release_assert": BOTH_SIDES,
    "__trap": DEVICE_ONLY,
    "abort": HOST_ONLY,
    "std::abort": HOST_ONLY,
    "cudaDeviceSynchronize": HOST_ONLY,
}
_NVCC_ONLY_BUILTINS = frozenset({"__trap", "cudaDeviceSynchronize"})


def builtin_spaces(name: str, profile) -> Optional[frozenset]:
    if name in _NVCC_ONLY_BUILTINS and profile.compiler != "nvcc":
        return None
    return BUILTIN_FUNCTIONS.get(name)


# --------------------------------------------------------------------------
# Symbol table


@dataclass
class SymbolTable:
    ast: n.Ast
    structs: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)  # name -> [FunctionDecl]

    def struct(self, name: str) -> Optional[n.StructDecl]:
        return self.structs.get(name)

    def overloads(self, name: str) -> list:
        return self.functions.get(name, [])

    @staticmethod
    def member_functions(struct: n.StructDecl, name: str) -> list:
        return [m for m in struct.member_functions() if m.name == name]

    @staticmethod
    def member_var(struct: n.StructDecl, name: str) -> Optional[n.MemberVar]:
        for m in struct.member_vars():
            if m.name == name:
                return m
        return None


def _spec_signature(spec: n.SpecifierSet) -> str:
    bits = []
    if spec.host:
        bits.append("H" + (f"({n._p_expr(spec.host_pred)})" if spec.host_pred else ""))
    if spec.device:
        bits.append("D" + (f"({n._p_expr(spec.device_pred)})" if spec.device_pred else ""))
    if spec.global_:
        bits.append("G")
    return "".join(bits)


def signature_key(decl: n.FunctionDecl, include_spaces: bool) -> tuple:
    """Identity of one declaration, stable across compile passes."""
    params = tuple(n._p_type(p.type) for p in decl.params)
    req = n._p_expr(decl.requires) if decl.requires is not None else ""
    spaces = _spec_signature(decl.spec) if include_spaces else ""
    return (decl.owner or "", decl.name, params, req, spaces)


def resolve(ast: n.Ast, profile, mode) -> tuple[SymbolTable, list]:
    """Build the symbol table, diagnosing duplicates and undefined names."""
    from .spacecheck import Mode  # cycle-free: enum only

    table = SymbolTable(ast)
    diags: list[Diagnostic] = []
    include_spaces = mode is Mode.PROPOSAL2
    seen: dict[tuple, SrcLoc] = {}

    def is_duplicate(decl: n.FunctionDecl) -> bool:
        key = signature_key(decl, include_spaces)
        if key in seen:
            diags.append(
                Diagnostic.make(
                    "E0102",
                    decl.loc,
                    f'duplicate definition of "{decl.display_name()}"',
                )
            )
            return True
        seen[key] = decl.loc
        return False

    for item in ast.items:
        if isinstance(item, n.StructDecl):
            if item.name in table.structs:
                diags.append(
                    Diagnostic.make(
                        "E0102", item.loc, f'duplicate definition of "{item.name}"'
                    )
                )
                continue
            table.structs[item.name] = item
            kept = []
            for m in item.members:
                if isinstance(m, n.FunctionDecl):
                    m.owner = item.name
                    if is_duplicate(m):
                        continue  # later phases see the first definition only
                kept.append(m)
            item.members = kept
        elif isinstance(item, n.FunctionDecl):
            if not is_duplicate(item):
                table.functions.setdefault(item.name, []).append(item)

    diags.extend(_check_mode_gated_syntax(ast, mode))
    diags.extend(_check_free_call_names(ast, table, profile))

    cfg = TraitConfig()
    for item in ast.items:
        if isinstance(item, n.StaticAssertDecl):
            try:
                value = eval_const_expr(item.expr, {}, table, cfg)
            except SubstFailure:
                diags.append(
                    Diagnostic.make(
                        "E0104", item.loc, "static assertion cannot be evaluated"
                    )
                )
            except SemaError as e:
                diags.append(e.diagnostic())
            else:
                if value is not True:
                    diags.append(
                        Diagnostic.make("E0104", item.loc, "static assertion failed")
                    )
    return table, diags


def _check_mode_gated_syntax(ast: n.Ast, mode) -> list:
    from .spacecheck import Mode

    diags = []
    for item in ast.items:
        if isinstance(item, n.StructDecl):
            if mode is not Mode.PROPOSAL2 and not item.spec.undecorated:
                diags.append(
                    Diagnostic.make(
                        "E0001",
                        item.loc,
                        "struct-level execution-space specifiers require --mode=proposal2",
                    )
                )
            fns = item.member_functions()
        else:
            fns = [item] if isinstance(item, n.FunctionDecl) else []
        if mode is not Mode.PROPOSAL1:
            for fn in fns:
                if fn.spec.has_conditionals():
                    diags.append(
                        Diagnostic.make(
                            "E0001",
                            fn.loc,
                            "conditional execution-space specifiers require --mode=proposal1",
                        )
                    )
    return diags


def _walk_exprs(stmts):
    for s in stmts:
        if isinstance(s, n.ExprStmt):
            yield s.expr
        elif isinstance(s, n.ReturnStmt):
            if s.expr is not None:
                yield s.expr
        elif isinstance(s, n.IfStmt):
            yield s.cond
            yield from _walk_exprs(s.then)
            if s.orelse is not None:
                yield from _walk_exprs(s.orelse)
        elif isinstance(s, n.ForStmt):
            yield s.init
            yield s.bound
            yield from _walk_exprs(s.body)
        elif isinstance(s, n.LaunchStmt):
            yield s.grid
            yield s.block
            yield from s.args
            yield ("launch", s)


def _subexprs(e):
    yield e
    if isinstance(e, (n.CallExpr, n.StaticCallExpr)):
        for a in e.args:
            yield from _subexprs(a)
    elif isinstance(e, n.MemberCallExpr):
        yield from _subexprs(e.recv)
        for a in e.args:
            yield from _subexprs(a)
    elif isinstance(e, n.UnaryExpr):
        yield from _subexprs(e.operand)
    elif isinstance(e, n.BinaryExpr):
        yield from _subexprs(e.lhs)
        yield from _subexprs(e.rhs)


def _check_free_call_names(ast: n.Ast, table: SymbolTable, profile) -> list:
    diags = []
    bodies = []
    for item in ast.items:
        if isinstance(item, n.FunctionDecl) and item.body is not None:
            bodies.append(item.body)
        elif isinstance(item, n.StructDecl):
            bodies.extend(m.body for m in item.member_functions() if m.body is not None)
    for body in bodies:
        for entry in _walk_exprs(body):
            if isinstance(entry, tuple):
                stmt = entry[1]
                if not table.overloads(stmt.name):
                    diags.append(
                        Diagnostic.make(
                            "E0101", stmt.loc, f'undefined name "{stmt.name}"'
                        )
                    )
                continue
            for sub in _subexprs(entry):
                if isinstance(sub, n.CallExpr):
                    if table.overloads(sub.name):
                        continue
                    if builtin_spaces(sub.name, profile) is not None:
                        continue
                    diags.append(
                        Diagnostic.make(
                            "E0101", sub.loc, f'undefined name "{sub.name}"'
                        )
                    )
    return diags


# --------------------------------------------------------------------------
# Types, traits, constant evaluation

Bindings = dict  # name -> Type | HDC


def struct_bindings(struct: n.StructDecl, t: Type) -> Bindings:
    return {tp.name: v for tp, v in zip(struct.tparams, t.targs)}


def resolve_type(tref: n.TypeRef, env: Bindings, table: SymbolTable) -> Type:
    if tref.name in ("int", "bool", "void"):
        if tref.targs:
            raise SemaError("E0001", tref.loc, f"{tref.name} takes no template arguments")
        return Type(tref.name)
    if tref.name in env:
        bound = env[tref.name]
        if isinstance(bound, Type):
            if tref.targs:
                raise SubstFailure(f"{tref.name} is not a template")
            return bound
        raise SubstFailure(f"{tref.name} does not name a type")
    struct = table.struct(tref.name)
    if struct is None:
        raise SemaError("E0101", tref.loc, f'undefined type "{tref.name}"')
    values = []
    for i, tp in enumerate(struct.tparams):
        if i < len(tref.targs):
            values.append(_targ_as_hdc(tref.targs[i], env, table))
        elif tp.default is not None:
            values.append(eval_const_expr(tp.default, env, table, TraitConfig()))
        else:
            raise SemaError(
                "E0001", tref.loc, f'missing template arguments for "{tref.name}"'
            )
    if len(tref.targs) > len(struct.tparams):
        raise SemaError("E0001", tref.loc, f'too many template arguments for "{tref.name}"')
    for v in values:
        if not isinstance(v, HDC):
            raise SubstFailure("struct template arguments must be HDC constants")
    return Type(tref.name, tuple(values))


def _targ_as_hdc(targ, env: Bindings, table: SymbolTable):
    if isinstance(targ, n.TypeRef):
        if targ.targs:
            raise SubstFailure("expected an HDC constant")
        if targ.name in env:
            val = env[targ.name]
            if isinstance(val, HDC):
                return val
            raise SubstFailure("expected an HDC constant")
        raise SubstFailure(f'"{targ.name}" is not an HDC constant')
    return eval_const_expr(targ, env, table, TraitConfig())


def targ_as_type(targ, env: Bindings, table: SymbolTable) -> Type:
    if isinstance(targ, n.TypeRef):
        return resolve_type(targ, env, table)
    raise SubstFailure("expected a type argument")


def compute_hdc(t: Type, table: SymbolTable, cfg: TraitConfig) -> HDC:
    """The compatibility trait: the value of a static `hdc` member, else Hst."""
    if t.name in ("int", "bool"):
        return HDC.HstDev if cfg.fundamentals_hstdev else HDC.Hst
    struct = table.struct(t.name)
    if struct is None:
        raise SubstFailure(f'"{t.name}" has no compatibility value')
    mv = SymbolTable.member_var(struct, "hdc")
    if mv is None:
        return HDC.Hst
    if mv.type_name != "HDC":
        raise SemaError(
            "E0103", mv.loc, f'member "hdc" of "{t.name}" is not an HDC constant'
        )
    value = eval_const_expr(mv.value, struct_bindings(struct, t), table, cfg)
    if not isinstance(value, HDC):
        raise SemaError(
            "E0103", mv.loc, f'member "hdc" of "{t.name}" is not an HDC constant'
        )
    return value


def eval_const_expr(expr, env: Bindings, table: SymbolTable, cfg: TraitConfig):
    """Evaluate a compile-time expression to an HDC, bool, or int value.

    Unbound names and absent members raise SubstFailure so overload
    filtering stays silent; malformed constructs raise SemaError.
    """
    if isinstance(expr, n.IntLit):
        return expr.value
    if isinstance(expr, n.BoolLit):
        return expr.value
    if isinstance(expr, n.HdcLit):
        return HDC[expr.value]
    if isinstance(expr, n.CudaArchRef):
        raise SubstFailure("cuda_arch is not usable in constant expressions")
    if isinstance(expr, n.NameRef):
        if expr.name not in env:
            raise SubstFailure(f'unbound name "{expr.name}"')
        val = env[expr.name]
        if isinstance(val, Type):
            raise SubstFailure(f'"{expr.name}" is a type, not a constant')
        return val
    if isinstance(expr, n.HdcTrait):
        t = resolve_type(expr.type, env, table)
        return compute_hdc(t, table, cfg)
    if isinstance(expr, n.MemberConst):
        t = resolve_type(expr.type, env, table)
        struct = table.struct(t.name)
        if struct is None:
            raise SubstFailure(f'"{t.name}" has no members')
        mv = SymbolTable.member_var(struct, expr.name)
        if mv is None:
            raise SubstFailure(f'"{t.name}" has no member "{expr.name}"')
        value = eval_const_expr(mv.value, struct_bindings(struct, t), table, cfg)
        if mv.type_name == "HDC" and not isinstance(value, HDC):
            raise SemaError("E0103", mv.loc, f'member "hdc" of "{t.name}" is not an HDC constant')
        return value
    if isinstance(expr, n.UnaryExpr):
        val = eval_const_expr(expr.operand, env, table, cfg)
        if not isinstance(val, bool):
            raise SubstFailure("operand of ! is not a boolean")
        return not val
    if isinstance(expr, n.BinaryExpr):
        lhs = eval_const_expr(expr.lhs, env, table, cfg)
        rhs = eval_const_expr(expr.rhs, env, table, cfg)
        if expr.op in ("==", "!="):
            if type(lhs) is not type(rhs):
                raise SubstFailure("comparison between unrelated kinds")
            return (lhs == rhs) == (expr.op == "==")
        if expr.op in ("&&", "||"):
            if not isinstance(lhs, bool) or not isinstance(rhs, bool):
                raise SubstFailure("logical operands are not booleans")
            return (lhs and rhs) if expr.op == "&&" else (lhs or rhs)
        if expr.op == "<":
            if not isinstance(lhs, int) or not isinstance(rhs, int):
                raise SubstFailure("ordering is defined on integers only")
            return lhs < rhs
    raise SubstFailure(f"not a constant expression: {type(expr).__name__}")


# --------------------------------------------------------------------------
# Overload resolution


@dataclass
class Selected:
    decl: n.FunctionDecl
    bindings: Bindings
    owner_type: Optional[Type] = None  # receiver struct instance for members


def _candidate_env(bindings: Bindings, owner_struct, owner_bindings, table):
    """Names visible to defaults and requires clauses of one candidate."""
    env = dict(owner_bindings or {})
    if owner_struct is not None:
        # Member constants of the enclosing struct are usable by name.
        for mv in owner_struct.member_vars():
            try:
                env[mv.name] = eval_const_expr(mv.value, owner_bindings or {}, table, TraitConfig())
            except (SubstFailure, SemaError):
                pass
    env.update(bindings)
    return env


def resolve_overload(
    name: str,
    candidates: list,
    explicit_targs: list,
    arg_types: list,
    loc: SrcLoc,
    *,
    env: Bindings,
    table: SymbolTable,
    cfg: TraitConfig,
    mode,
    context_side: ExecSpace,
    owner_struct: Optional[n.StructDecl] = None,
    owner_bindings: Optional[Bindings] = None,
    owner_type: Optional[Type] = None,
) -> Selected:
    """Select exactly one viable candidate, SFINAE-discarding the rest.

    Candidates whose requires clause is false or whose substitution fails
    are dropped silently.  Under the propagation mode, space-incompatible
    candidates are dropped too, unless that would empty the set (the call
    then binds and the stray is reported by the caller).
    """
    from .spacecheck import Mode

    viable: list[Selected] = []
    for decl in candidates:
        try:
            sel = _try_candidate(
                decl, explicit_targs, arg_types, env, table, cfg,
                owner_struct, owner_bindings,
            )
        except SubstFailure:
            continue
        sel.owner_type = owner_type
        viable.append(sel)
    if mode is Mode.PROPOSAL2 and len(viable) > 1:
        compatible = [
            s for s in viable
            if _space_compatible(s.decl, context_side, owner_struct)
        ]
        if compatible:
            viable = compatible
    if not viable:
        raise OverloadError("E1301", loc, f'no viable candidate for call to "{name}"')
    if len(viable) > 1:
        raise OverloadError(
            "E1302",
            loc,
            f'call to "{name}" is ambiguous ({len(viable)} candidates survive)',
        )
    return viable[0]


def _try_candidate(
    decl: n.FunctionDecl,
    explicit_targs: list,
    arg_types: list,
    env: Bindings,
    table: SymbolTable,
    cfg: TraitConfig,
    owner_struct,
    owner_bindings,
) -> Selected:
    tps = decl.tparams
    if len(explicit_targs) > len(tps):
        raise SubstFailure("too many template arguments")
    bindings: Bindings = {}
    for tp, targ in zip(tps, explicit_targs):
        if tp.kind == "type":
            bindings[tp.name] = targ_as_type(targ, env, table)
        else:
            value = _targ_as_hdc(targ, env, table)
            if not isinstance(value, HDC):
                raise SubstFailure("expected an HDC constant")
            bindings[tp.name] = value
    if len(arg_types) != len(decl.params):
        raise SubstFailure("argument count mismatch")
    # Deduce the type parameter from a directly matching argument slot.
    for tp in tps:
        if tp.kind != "type" or tp.name in bindings:
            continue
        for p, at in zip(decl.params, arg_types):
            if p.type.name == tp.name and not p.type.targs and at is not None:
                bindings[tp.name] = at
                break
    cand_env = _candidate_env(bindings, owner_struct, owner_bindings, table)
    for tp in tps:
        if tp.name in bindings:
            continue
        if tp.kind == "hdc" and tp.default is not None:
            value = eval_const_expr(tp.default, cand_env, table, cfg)
            if not isinstance(value, HDC):
                raise SubstFailure("default is not an HDC constant")
            bindings[tp.name] = value
            cand_env[tp.name] = value
        else:
            raise SubstFailure(f'could not bind template parameter "{tp.name}"')
    # Check arguments against the resolved parameter types.
    full_env = dict(owner_bindings or {})
    full_env.update(bindings)
    for p, at in zip(decl.params, arg_types):
        if at is None:
            continue
        try:
            want = resolve_type(p.type, full_env, table)
        except SemaError:
            raise SubstFailure("parameter type does not resolve")
        if want != at:
            raise SubstFailure("argument type mismatch")
    if decl.requires is not None:
        ok = eval_const_expr(decl.requires, cand_env, table, cfg)
        if not isinstance(ok, bool):
            raise SubstFailure("requires clause is not boolean")
        if not ok:
            raise SubstFailure("requires clause is false")
    return Selected(decl, bindings)


def _space_compatible(decl: n.FunctionDecl, side: ExecSpace, owner_struct) -> bool:
    spec = decl.spec
    if spec.undecorated and owner_struct is not None and not owner_struct.spec.undecorated:
        spec = owner_struct.spec
    if spec.undecorated or spec.global_:
        return True
    declared = declared_spaces(spec)
    return side in declared or declared == BOTH_SIDES


# --------------------------------------------------------------------------
# Effective execution spaces


GLOBAL = "global"


def declared_spaces(spec: n.SpecifierSet) -> frozenset:
    spaces = set()
    if spec.host:
        spaces.add(HOST)
    if spec.device:
        spaces.add(DEVICE)
    if not spaces:
        spaces.add(HOST)
    return frozenset(spaces)


def evaluate_conditional_spec(
    spec: n.SpecifierSet, bindings: Bindings, table: SymbolTable,
    cfg: TraitConfig, at_loc: SrcLoc, name: str,
) -> frozenset:
    """Filter declared spaces through their predicates (conditional mode).

    An absent predicate counts as true; an empty result is E1401.
    """
    spaces = set()
    if spec.host and _pred_true(spec.host_pred, bindings, table, cfg):
        spaces.add(HOST)
    if spec.device and _pred_true(spec.device_pred, bindings, table, cfg):
        spaces.add(DEVICE)
    if not spaces:
        raise SemaError(
            "E1401",
            at_loc,
            f'all execution-space predicates of "{name}" are false; '
            "the instance has no execution space",
        )
    return frozenset(spaces)


def _pred_true(pred, bindings, table, cfg) -> bool:
    if pred is None:
        return True
    value = eval_const_expr(pred, bindings, table, cfg)
    if not isinstance(value, bool):
        raise SubstFailure("specifier predicate is not boolean")
    return value


def effective_spaces(
    decl: n.FunctionDecl,
    bindings: Bindings,
    mode,
    context_side: ExecSpace,
    table: SymbolTable,
    cfg: TraitConfig,
    at_loc: SrcLoc,
    owner_struct: Optional[n.StructDecl] = None,
):
    """Spaces an instance is compiled for; GLOBAL for kernels.

    Classic-family modes use the declared set with undecorated meaning
    host.  The conditional mode filters by predicate.  The propagation
    mode lets undecorated callables inherit the calling space and struct
    decorations distribute to undecorated members.
    """
    from .spacecheck import Mode

    spec = decl.spec
    if spec.global_:
        return GLOBAL
    if mode is Mode.PROPOSAL1 and spec.has_conditionals():
        env = _candidate_env(bindings, owner_struct, bindings, table)
        return evaluate_conditional_spec(spec, env, table, cfg, at_loc, decl.display_name())
    if mode is Mode.PROPOSAL2:
        if decl.name == "main" and decl.owner is None:
            return HOST_ONLY
        if spec.undecorated:
            if owner_struct is not None and not owner_struct.spec.undecorated:
                return declared_spaces(owner_struct.spec)
            return frozenset({context_side})
        return declared_spaces(spec)
    return declared_spaces(spec)
