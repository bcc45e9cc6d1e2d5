"""Recursive-descent parser for preprocessed MiniCU units."""
from __future__ import annotations

from ..diagnostics import SrcLoc
from .lexer import LexError, Token, tokenize
from . import nodes as n

KEYWORDS = {
    "struct",
    "class",
    "enum",
    "template",
    "typename",
    "requires",
    "return",
    "if",
    "else",
    "for",
    "void",
    "int",
    "bool",
    "true",
    "false",
    "constexpr",
    "static",
    "static_assert",
    "HDC",
    "__host__",
    "__device__",
    "__global__",
}

SPECIFIER_TOKENS = ("__host__", "__device__", "__global__")

HDC_VALUES = ("Hst", "Dev", "HstDev")

# Builtin callables with fixed arity; printf is validated separately.
BUILTIN_ARITY = {
    "release_assert": 1,
    "__trap": 0,
    "abort": 0,
    "std::abort": 0,
    "cudaDeviceSynchronize": 0,
}


class ParseError(Exception):
    """E0001: the unit does not match the grammar."""

    def __init__(self, loc: SrcLoc, message: str):
        super().__init__(f"{loc}: {message}")
        self.loc = loc
        self.message = message


class _Parser:
    def __init__(self, toks: list[Token], specifier_mode: str):
        self.toks = toks
        self.pos = 0
        self.specifier_mode = specifier_mode  # keep | erase | reject

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def at(self, text: str, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.text == text and t.kind in ("ident", "punct")

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, text: str, what: str | None = None) -> Token:
        t = self.peek()
        if t.text != text or t.kind not in ("ident", "punct"):
            found = t.text if t.kind != "eof" else "end of input"
            raise ParseError(t.loc, f"expected {what or text!r}, found {found!r}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident" or t.text in KEYWORDS:
            found = t.text if t.kind != "eof" else "end of input"
            raise ParseError(t.loc, f"expected {what}, found {found!r}")
        return self.advance()

    def err(self, message: str) -> ParseError:
        return ParseError(self.peek().loc, message)

    # -- unit --------------------------------------------------------------

    def parse_unit(self, file: str) -> n.Ast:
        items = []
        while self.peek().kind != "eof":
            items.append(self.parse_item())
        has_main = any(
            isinstance(it, n.FunctionDecl) and it.name == "main" for it in items
        )
        return n.Ast(items, has_main, file)

    def parse_item(self):
        pragma = None
        if self.peek().kind == "pragma":
            tok = self.advance()
            if tok.text not in ("hd_warning_disable", "nv_exec_check_disable"):
                raise ParseError(tok.loc, f"unknown pragma {tok.text!r}")
            pragma = tok.text
        if self.at("enum"):
            if pragma:
                raise self.err("a pragma must precede a function")
            return self.parse_enum_hdc()
        if self.at("static_assert"):
            if pragma:
                raise self.err("a pragma must precede a function")
            return self.parse_static_assert()
        tparams = []
        requires = None
        if self.at("template"):
            tparams = self.parse_template_header()
            if self.at("requires"):
                requires = self.parse_requires_clause()
        spec = self.parse_specifiers()
        spec.pragma = pragma
        if self.at("struct") or self.at("class"):
            if pragma:
                raise self.err("a pragma must precede a function")
            if requires is not None:
                raise self.err("a requires clause cannot constrain a struct")
            return self.parse_struct(tparams, spec)
        return self.parse_function(tparams, requires, spec, owner=None)

    def parse_enum_hdc(self):
        loc = self.expect("enum").loc
        self.expect("class")
        self.expect("HDC", "the HDC enum name")
        self.expect("{")
        for i, name in enumerate(HDC_VALUES):
            if i:
                self.expect(",")
            self.expect(name, f"enumerator {name!r}")
        self.expect("}")
        self.expect(";")
        return n.EnumHdcDecl(loc=loc)

    def parse_static_assert(self):
        loc = self.expect("static_assert").loc
        self.expect("(")
        expr = self.parse_expr()
        self.expect(")")
        self.expect(";")
        return n.StaticAssertDecl(expr, loc=loc)

    # -- templates and specifiers -------------------------------------------

    def parse_template_header(self) -> list:
        self.expect("template")
        self.expect("<")
        params = []
        n_type = n_hdc = 0
        while True:
            t = self.peek()
            if self.at("typename"):
                self.advance()
                name = self.expect_ident("template parameter name")
                params.append(n.TemplateParam("type", name.text, None, loc=name.loc))
                n_type += 1
            elif self.at("HDC"):
                self.advance()
                name = self.expect_ident("template parameter name")
                default = None
                if self.at("="):
                    self.advance()
                    default = self.parse_targ_expr()
                params.append(n.TemplateParam("hdc", name.text, default, loc=name.loc))
                n_hdc += 1
            else:
                raise ParseError(t.loc, "expected 'typename' or 'HDC' template parameter")
            if self.at(","):
                self.advance()
                continue
            break
        self.expect(">")
        if n_type > 1 or n_hdc > 1:
            raise ParseError(
                params[-1].loc,
                "at most one type parameter and one HDC parameter are supported",
            )
        return params

    def parse_requires_clause(self):
        self.expect("requires")
        self.expect("(")
        expr = self.parse_expr()
        self.expect(")")
        return expr

    def parse_specifiers(self) -> n.SpecifierSet:
        spec = n.SpecifierSet()
        seen = set()
        while True:
            t = self.peek()
            if t.text in SPECIFIER_TOKENS and t.kind == "ident":
                if self.specifier_mode == "reject":
                    raise ParseError(
                        t.loc,
                        f"{t.text} is not recognized by this compiler profile",
                    )
                if t.text in seen:
                    raise ParseError(t.loc, f"duplicate specifier {t.text}")
                seen.add(t.text)
                self.advance()
                pred = None
                if t.text in ("__host__", "__device__") and self.at("("):
                    self.advance()
                    pred = self.parse_expr()
                    self.expect(")")
                if self.specifier_mode == "erase":
                    continue
                if t.text == "__host__":
                    spec.host, spec.host_pred = True, pred
                elif t.text == "__device__":
                    spec.device, spec.device_pred = True, pred
                else:
                    spec.global_ = True
            elif self.at("constexpr"):
                self.advance()
                spec.constexpr = True
            else:
                break
        if spec.global_ and (spec.host or spec.device):
            raise ParseError(t.loc, "__global__ excludes __host__ and __device__")
        return spec

    # -- declarations --------------------------------------------------------

    def parse_struct(self, tparams, spec):
        kw = self.advance().text
        name = self.expect_ident("struct name")
        if spec.constexpr or spec.global_:
            raise ParseError(name.loc, "invalid specifier on a struct")
        for tp in tparams:
            if tp.kind != "hdc":
                raise ParseError(tp.loc, "struct templates support only HDC parameters")
        self.expect("{")
        members = []
        while not self.at("}"):
            members.append(self.parse_member())
        self.expect("}")
        self.expect(";")
        return n.StructDecl(name.text, tparams, spec, members, kw, loc=name.loc)

    def parse_member(self):
        pragma = None
        if self.peek().kind == "pragma":
            tok = self.advance()
            if tok.text not in ("hd_warning_disable", "nv_exec_check_disable"):
                raise ParseError(tok.loc, f"unknown pragma {tok.text!r}")
            pragma = tok.text
        tparams = []
        requires = None
        if self.at("template"):
            tparams = self.parse_template_header()
            if self.at("requires"):
                requires = self.parse_requires_clause()
        spec = n.SpecifierSet()
        is_static = False
        # static/constexpr/specifiers may appear in any order before the type.
        while True:
            if self.at("static"):
                self.advance()
                is_static = True
            elif self.at("constexpr"):
                self.advance()
                spec.constexpr = True
            elif self.peek().text in SPECIFIER_TOKENS and self.peek().kind == "ident":
                sub = self.parse_specifiers()
                spec.host, spec.host_pred = spec.host or sub.host, sub.host_pred or spec.host_pred
                spec.device, spec.device_pred = (
                    spec.device or sub.device,
                    sub.device_pred or spec.device_pred,
                )
                if sub.global_:
                    raise self.err("__global__ is not allowed on member functions")
                spec.constexpr = spec.constexpr or sub.constexpr
            else:
                break
        spec.pragma = pragma
        type_ = self.parse_type()
        name = self.expect_ident("member name")
        if self.at("="):
            if tparams or requires is not None or pragma:
                raise ParseError(name.loc, "invalid declaration of a member constant")
            if type_.name not in ("HDC", "bool", "int") or type_.targs:
                raise ParseError(
                    name.loc, "member constants must have type HDC, bool, or int"
                )
            if not (is_static and spec.constexpr):
                raise ParseError(name.loc, "member constants must be static constexpr")
            if spec.host or spec.device:
                raise ParseError(name.loc, "invalid specifier on a member constant")
            self.advance()
            value = self.parse_expr()
            self.expect(";")
            return n.MemberVar(name.text, type_.name, value, loc=name.loc)
        self.pos -= 1  # put the member name back for parse_function
        return self.parse_function(tparams, requires, spec, owner="member",
                                   ret=type_, is_static=is_static)

    def parse_function(self, tparams, requires, spec, owner,
                       ret=None, is_static=False):
        if ret is None:
            ret = self.parse_type()
        name = self.expect_ident("function name")
        loc = name.loc
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ptype = self.parse_type()
                pname = self.expect_ident("parameter name")
                params.append(n.Param(ptype, pname.text, loc=pname.loc))
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        if requires is not None and not tparams:
            raise ParseError(loc, "a requires clause needs a template header")
        if spec.global_:
            if ret.name != "void":
                raise ParseError(loc, "a __global__ function must return void")
            if owner is not None:
                raise ParseError(loc, "__global__ is not allowed on member functions")
        if name.text == "main" and owner is None:
            if tparams or not spec.undecorated or spec.constexpr or is_static:
                raise ParseError(loc, "main takes no specifiers and no template")
            if ret.name != "int" or params:
                raise ParseError(loc, "main must be declared as int main()")
        body = None
        if self.at("{"):
            body = self.parse_block()
        else:
            self.expect(";", "a function body or ';'")
        return n.FunctionDecl(
            name.text, tparams, requires, spec, ret, params, body,
            is_static=is_static, loc=loc,
        )

    # -- types ----------------------------------------------------------------

    def parse_type(self) -> n.TypeRef:
        t = self.peek()
        if t.text in ("void", "int", "bool", "HDC") and t.kind == "ident":
            self.advance()
            return n.TypeRef(t.text, [], loc=t.loc)
        name = self.expect_ident("type name")
        targs = []
        if self.at("<"):
            targs = self.parse_targ_list()
        return n.TypeRef(name.text, targs, loc=name.loc)

    def parse_targ_list(self) -> list:
        self.expect("<")
        args = [self.parse_targ()]
        while self.at(","):
            self.advance()
            args.append(self.parse_targ())
        self.expect(">")
        return args

    def parse_targ(self):
        t = self.peek()
        if t.text in ("int", "bool") and t.kind == "ident":
            self.advance()
            return n.TypeRef(t.text, [], loc=t.loc)
        if self.at("HDC") and self.at("::", 1):
            return self.parse_targ_expr()
        if self.at("hdc") and self.at("<", 1):
            return self.parse_targ_expr()
        if t.kind == "int" or t.text in ("true", "false", "!", "("):
            return self.parse_targ_expr()
        name = self.expect_ident("template argument")
        if self.at("<"):
            return n.TypeRef(name.text, self.parse_targ_list(), loc=name.loc)
        # A bare name: a type, or an HDC constant; resolution decides.
        return n.TypeRef(name.text, [], loc=name.loc)

    def parse_targ_expr(self):
        return self.parse_expr()

    # -- statements -------------------------------------------------------------

    def parse_block(self) -> list:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            stmts.append(self.parse_stmt())
        self.expect("}")
        return stmts

    def parse_stmt(self):
        t = self.peek()
        if self.at("return"):
            self.advance()
            expr = None
            if not self.at(";"):
                expr = self.parse_expr()
            self.expect(";")
            return n.ReturnStmt(expr, loc=t.loc)
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_block()
            orelse = None
            if self.at("else"):
                self.advance()
                orelse = self.parse_block()
            return n.IfStmt(cond, then, orelse, loc=t.loc)
        if self.at("for"):
            return self.parse_for()
        if t.text in ("int", "bool") and t.kind == "ident":
            self.advance()
            name = self.expect_ident("variable name")
            self.expect(";")
            return n.VarDeclStmt(n.TypeRef(t.text, [], loc=t.loc), name.text, loc=t.loc)
        if t.kind == "ident" and t.text not in KEYWORDS:
            stmt = self.try_parse_ident_led_stmt()
            if stmt is not None:
                return stmt
        expr = self.parse_expr()
        self.expect(";")
        return n.ExprStmt(expr, loc=t.loc)

    def parse_for(self):
        loc = self.expect("for").loc
        self.expect("(")
        self.expect("int")
        var = self.expect_ident("loop variable").text
        self.expect("=")
        init = self.parse_expr()
        self.expect(";")
        v2 = self.expect_ident("loop variable").text
        self.expect("<")
        bound = self.parse_expr()
        self.expect(";")
        self.expect("++")
        v3 = self.expect_ident("loop variable").text
        if v2 != var or v3 != var:
            raise ParseError(loc, "the loop condition and increment must use the loop variable")
        self.expect(")")
        body = self.parse_block()
        return n.ForStmt(var, init, bound, body, loc=loc)

    def try_parse_ident_led_stmt(self):
        """Launches and variable declarations; None means plain expression."""
        start = self.pos
        name = self.advance()
        targs = []
        if self.at("<"):
            try:
                targs = self.parse_targ_list()
            except ParseError:
                self.pos = start
                return None
        if self.at("<<<"):
            self.advance()
            grid = self.parse_expr()
            self.expect(",")
            block = self.parse_expr()
            self.expect(">>>")
            self.expect("(")
            args = self.parse_call_args()
            self.expect(")")
            self.expect(";")
            return n.LaunchStmt(name.text, targs, grid, block, args, loc=name.loc)
        nxt = self.peek()
        if nxt.kind == "ident" and nxt.text not in KEYWORDS:
            var = self.advance()
            self.expect(";")
            ty = n.TypeRef(name.text, targs, loc=name.loc)
            return n.VarDeclStmt(ty, var.text, loc=name.loc)
        self.pos = start
        return None

    # -- expressions -----------------------------------------------------------

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        lhs = self.parse_and()
        while self.at("||"):
            loc = self.advance().loc
            lhs = n.BinaryExpr("||", lhs, self.parse_and(), loc=loc)
        return lhs

    def parse_and(self):
        lhs = self.parse_cmp()
        while self.at("&&"):
            loc = self.advance().loc
            lhs = n.BinaryExpr("&&", lhs, self.parse_cmp(), loc=loc)
        return lhs

    def parse_cmp(self):
        lhs = self.parse_unary()
        if self.at("==") or self.at("!="):
            op = self.advance()
            return n.BinaryExpr(op.text, lhs, self.parse_unary(), loc=op.loc)
        return lhs

    def parse_unary(self):
        if self.at("!"):
            loc = self.advance().loc
            return n.UnaryExpr("!", self.parse_unary(), loc=loc)
        return self.parse_postfix()

    def parse_call_args(self) -> list:
        args = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if self.at(","):
                    self.advance()
                    continue
                break
        return args

    def _finish_call_suffix(self, loc):
        self.expect("(")
        args = self.parse_call_args()
        self.expect(")")
        return args

    def _maybe_member_call(self, recv):
        while self.at("."):
            self.advance()
            name = self.expect_ident("member name")
            targs = []
            if self.at("<"):
                targs = self.parse_targ_list()
            args = self._finish_call_suffix(name.loc)
            recv = n.MemberCallExpr(recv, name.text, targs, args, loc=_expr_loc(recv))
        return recv

    def _validate_call(self, name: str, args: list, loc: SrcLoc):
        if name == "printf":
            if not args or not isinstance(args[0], n.StringLit):
                raise ParseError(loc, "printf needs a literal format string")
            fmt = args[0].value
            rest = fmt
            holes = 0
            while "%" in rest:
                idx = rest.index("%")
                if rest[idx : idx + 2] != "%d":
                    raise ParseError(loc, "printf supports only literal text and %d")
                holes += 1
                rest = rest[idx + 2 :]
            if holes > 1:
                raise ParseError(loc, "printf supports at most one %d")
            if len(args) - 1 != holes:
                raise ParseError(loc, "printf argument count does not match the format")
        elif name in BUILTIN_ARITY and len(args) != BUILTIN_ARITY[name]:
            raise ParseError(loc, f"{name} takes exactly {BUILTIN_ARITY[name]} argument(s)")

    def parse_postfix(self):
        t = self.peek()
        if t.kind == "int":
            self.advance()
            return n.IntLit(int(t.text), loc=t.loc)
        if t.kind == "string":
            self.advance()
            return n.StringLit(t.text, loc=t.loc)
        if self.at("true") or self.at("false"):
            self.advance()
            return n.BoolLit(t.text == "true", loc=t.loc)
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return self._maybe_member_call(inner)
        if self.at("cuda_arch"):
            self.advance()
            return n.CudaArchRef(loc=t.loc)
        if self.at("HDC") and self.at("::", 1):
            self.advance()
            self.advance()
            val = self.advance()
            if val.text not in HDC_VALUES:
                raise ParseError(val.loc, f"unknown HDC value {val.text!r}")
            return n.HdcLit(val.text, loc=t.loc)
        if self.at("hdc") and self.at("<", 1):
            self.advance()
            self.expect("<")
            ty = self.parse_type()
            self.expect(">")
            return n.HdcTrait(ty, loc=t.loc)
        if self.at("std") and self.at("::", 1):
            self.advance()
            self.advance()
            name = self.expect_ident("function name")
            qual = f"std::{name.text}"
            args = self._finish_call_suffix(name.loc)
            self._validate_call(qual, args, t.loc)
            return n.CallExpr(qual, [], args, loc=t.loc)
        if t.kind != "ident" or t.text in KEYWORDS:
            found = t.text if t.kind != "eof" else "end of input"
            raise ParseError(t.loc, f"expected an expression, found {found!r}")
        self.advance()
        name = t.text
        targs = []
        if self.at("<"):
            targs = self.parse_targ_list()
        if self.at("{"):
            self.advance()
            self.expect("}")
            obj = n.TempObj(n.TypeRef(name, targs, loc=t.loc), loc=t.loc)
            return self._maybe_member_call(obj)
        if self.at("::"):
            self.advance()
            member = self.expect_ident("member name")
            mtargs = []
            if self.at("<"):
                mtargs = self.parse_targ_list()
            ty = n.TypeRef(name, targs, loc=t.loc)
            if self.at("("):
                args = self._finish_call_suffix(member.loc)
                return n.StaticCallExpr(ty, member.text, mtargs, args, loc=t.loc)
            return n.MemberConst(ty, member.text, loc=t.loc)
        if self.at("("):
            args = self._finish_call_suffix(t.loc)
            self._validate_call(name, args, t.loc)
            return self._maybe_member_call(n.CallExpr(name, targs, args, loc=t.loc))
        if targs:
            raise self.err(f"unexpected template arguments on {name!r}")
        return self._maybe_member_call(n.NameRef(name, loc=t.loc))


def _expr_loc(e) -> SrcLoc:
    return e.loc


def parse(text: str, file: str = "<unit>", specifier_mode: str = "keep") -> n.Ast:
    """Parse one preprocessed unit into an AST.

    specifier_mode selects what happens to __host__/__device__/__global__
    tokens: "keep" records them, "erase" parses and discards them, and
    "reject" treats them as parse errors.
    """
    try:
        toks = tokenize(text, file)
    except LexError as e:
        raise ParseError(e.loc, e.message) from None
    return _Parser(toks, specifier_mode).parse_unit(file)
