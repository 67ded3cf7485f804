"""Recursive-descent parser for the shading-language subset.

Grammar (EBNF; ``{x}`` repeats, ``[x]`` is optional)::

    shader     = { global | function } ;
    global     = ("in" | "out" | "uniform") [precision] type IDENT ";" ;
    function   = (type | "void") IDENT "(" [param {"," param}] ")" block ;
    param      = type IDENT ;
    block      = "{" {stmt} "}" ;
    body       = block | stmt ;
    stmt       = block
               | "if" "(" expr ")" body ["else" body]
               | "switch" "(" expr ")" "{" {case} "}"
               | "for" "(" [decl | simple] ";" [expr] ";" [simple] ")" body
               | "while" "(" expr ")" body
               | "do" body "while" "(" expr ")" ";"
               | ("break" | "continue") ";"
               | "return" [expr] ";"
               | (decl | simple) ";" ;
    case       = ("case" ["-"] INT | "default") ":" {stmt} ;
    decl       = [precision] type IDENT ["=" expr] ;
    simple     = IDENT ("=" | "+=" | "-=" | "*=" | "/=") expr | IDENT ("++" | "--") ;
    expr       = binary expression over, loosest first:
                 "||" < "&&" < "==" "!=" < "<" ">" "<=" ">=" < "+" "-" < "*" "/" ;
    unary      = ("-" | "!") unary | postfix ;
    postfix    = primary {"." IDENT} ;
    primary    = FLOAT | INT | "true" | "false"
               | (IDENT | type) "(" [expr {"," expr}] ")"
               | IDENT | "(" expr ")" ;
    precision  = "highp" | "mediump" ;
    type       = "float" | "int" | "bool" | "vec2" | "vec3" | "vec4" | "ivec2" | "ivec3"
               | "ivec4" | "bvec2" | "bvec3" | "bvec4" | "sampler2D" ;

Binary operators are left-associative. A minus directly before a numeric
literal folds into the literal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import ast as A
from .errors import ParseError
from .lexer import Token, tokenize

TYPES = {
    "float", "int", "bool", "vec2", "vec3", "vec4", "ivec2", "ivec3", "ivec4",
    "bvec2", "bvec3", "bvec4", "sampler2D",
}
PRECISIONS = {"highp", "mediump"}
QUALIFIERS = {"in", "out", "uniform"}
ASSIGN_OPS = {"=", "+=", "-=", "*=", "/="}

# binary operator precedence, loosest first
_LEVELS = [("||",), ("&&",), ("==", "!="), ("<", ">", "<=", ">="), ("+", "-"), ("*", "/")]
PRECEDENCE = {op: i for i, ops in enumerate(_LEVELS) for op in ops}
UNARY_PREC = len(_LEVELS)


@dataclass
class SourceShader:
    text: str
    stage: str  # "vertex" | "fragment"
    name: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("shader text must be non-empty")
        if self.stage not in ("vertex", "fragment"):
            raise ValueError(f"unknown stage {self.stage!r}")


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise ParseError(f"{msg} (found {found!r})", tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            self.error(f"expected {text!r}")
        return t

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error("expected identifier")
        t = self.tok
        self.i += 1
        return t

    def type_name(self, allow_void: bool = False) -> Token:
        t = self.tok
        if t.kind == "kw" and (t.text in TYPES or (allow_void and t.text == "void")):
            self.i += 1
            return t
        self.error("expected type")

    # -- top level
    def shader(self) -> A.Shader:
        start = self.tok
        globals_: list[A.GlobalDecl] = []
        functions: list[A.FunctionDecl] = []
        while self.tok.kind != "eof":
            if self.tok.text in QUALIFIERS and self.tok.kind == "kw":
                globals_.append(self.global_decl())
            else:
                functions.append(self.function())
        return A.Shader(globals_, functions, pos=(start.line, start.col))

    def global_decl(self) -> A.GlobalDecl:
        q = self.tok
        self.i += 1
        precision = None
        if self.tok.text in PRECISIONS:
            precision = self.tok.text
            self.i += 1
        ty = self.type_name()
        name = self.ident()
        self.expect(";")
        return A.GlobalDecl(q.text, precision, ty.text, name.text, pos=(q.line, q.col))

    def function(self) -> A.FunctionDecl:
        rt = self.type_name(allow_void=True)
        name = self.ident()
        self.expect("(")
        params: list[A.Param] = []
        if not self.at(")"):
            while True:
                pt = self.type_name()
                pn = self.ident()
                params.append(A.Param(pt.text, pn.text, pos=(pt.line, pt.col)))
                if not self.accept(","):
                    break
        self.expect(")")
        body = self.block()
        return A.FunctionDecl(rt.text, name.text, params, body, pos=(rt.line, rt.col))

    # -- statements
    def block(self) -> A.Block:
        lb = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("expected '}'")
            stmts.append(self.statement())
        self.expect("}")
        return A.Block(stmts, pos=(lb.line, lb.col))

    def body(self) -> A.Block:
        if self.at("{"):
            return self.block()
        t = self.tok
        return A.Block([self.statement()], pos=(t.line, t.col))

    def statement(self) -> A.Stmt:
        t = self.tok
        pos = (t.line, t.col)
        if self.at("{"):
            return self.block()
        if self.accept("if"):
            return self.if_rest(pos)
        if self.accept("switch"):
            return self.switch_rest(pos)
        if self.accept("for"):
            self.expect("(")
            init = None
            if not self.at(";"):
                init = self.decl_or_simple()
            self.expect(";")
            cond = None if self.at(";") else self.expr()
            self.expect(";")
            step = None if self.at(")") else self.simple()
            self.expect(")")
            return A.For(init, cond, step, self.body(), pos=pos)
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return A.While(cond, self.body(), pos=pos)
        if self.accept("do"):
            body = self.body()
            self.expect("while")
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.expect(";")
            return A.DoWhile(body, cond, pos=pos)
        if self.accept("break"):
            self.expect(";")
            return A.Break(pos=pos)
        if self.accept("continue"):
            self.expect(";")
            return A.Continue(pos=pos)
        if self.accept("return"):
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return A.Return(value, pos=pos)
        s = self.decl_or_simple()
        self.expect(";")
        return s

    def if_rest(self, pos) -> A.If:
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.body()
        els = None
        if self.accept("else"):
            if self.at("if"):
                t = self.tok
                self.i += 1
                els = self.if_rest((t.line, t.col))
            else:
                els = self.body()
        return A.If(cond, then, els, pos=pos)

    def switch_rest(self, pos) -> A.Switch:
        self.expect("(")
        sel = self.expr()
        self.expect(")")
        self.expect("{")
        cases: list[A.Case] = []
        while not self.at("}"):
            t = self.tok
            if self.accept("case"):
                neg = self.accept("-") is not None
                if self.tok.kind != "int":
                    self.error("expected integer case label")
                label = int(self.tok.text)
                self.i += 1
                label = -label if neg else label
                self.expect(":")
            elif self.accept("default"):
                label = None
                self.expect(":")
            else:
                self.error("expected 'case' or 'default'")
            body = []
            while not (self.at("case") or self.at("default") or self.at("}")):
                if self.tok.kind == "eof":
                    self.error("expected '}'")
                body.append(self.statement())
            cases.append(A.Case(label, body, pos=(t.line, t.col)))
        self.expect("}")
        return A.Switch(sel, cases, pos=pos)

    def decl_or_simple(self) -> A.Stmt:
        t = self.tok
        if t.kind == "kw" and (t.text in PRECISIONS or t.text in TYPES):
            # a type keyword followed by '(' is a constructor expression, not a declaration
            if not (t.text in TYPES and self.peek().text == "("):
                precision = None
                if t.text in PRECISIONS:
                    precision = t.text
                    self.i += 1
                ty = self.type_name()
                name = self.ident()
                init = self.expr() if self.accept("=") else None
                return A.VarDecl(precision, ty.text, name.text, init, pos=(t.line, t.col))
        return self.simple()

    def simple(self) -> A.Stmt:
        t = self.ident()
        pos = (t.line, t.col)
        op = self.tok
        if op.kind == "op" and op.text in ASSIGN_OPS:
            self.i += 1
            return A.Assign(t.text, op.text, self.expr(), pos=pos)
        if op.kind == "op" and op.text in ("++", "--"):
            self.i += 1
            return A.IncDec(t.text, op.text, pos=pos)
        self.error("expected assignment")

    # -- expressions
    def expr(self, level: int = 0) -> A.Expr:
        if level == UNARY_PREC:
            return self.unary()
        left = self.expr(level + 1)
        ops = _LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            t = self.tok
            self.i += 1
            right = self.expr(level + 1)
            left = A.Binary(t.text, left, right, pos=(t.line, t.col))
        return left

    def unary(self) -> A.Expr:
        t = self.tok
        if t.kind == "op" and t.text in ("-", "!"):
            self.i += 1
            operand = self.unary()
            if t.text == "-" and isinstance(operand, (A.FloatLit, A.IntLit)) and not _is_negative(operand):
                operand.value = -operand.value
                operand.pos = (t.line, t.col)
                return operand
            return A.Unary(t.text, operand, pos=(t.line, t.col))
        return self.postfix()

    def postfix(self) -> A.Expr:
        e = self.primary()
        while self.at("."):
            self.i += 1
            comps = self.ident()
            e = A.Swizzle(e, comps.text, pos=(comps.line, comps.col))
        return e

    def primary(self) -> A.Expr:
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "float":
            self.i += 1
            from ..fp32 import f32
            return A.FloatLit(f32(float(t.text)), pos=pos)
        if t.kind == "int":
            self.i += 1
            return A.IntLit(int(t.text), pos=pos)
        if t.kind == "kw" and t.text in ("true", "false"):
            self.i += 1
            return A.BoolLit(t.text == "true", pos=pos)
        if (t.kind == "ident" or (t.kind == "kw" and t.text in TYPES)) and self.peek().text == "(":
            self.i += 2
            args = []
            if not self.at(")"):
                while True:
                    args.append(self.expr())
                    if not self.accept(","):
                        break
            self.expect(")")
            return A.Call(t.text, args, pos=pos)
        if t.kind == "ident":
            self.i += 1
            return A.Var(t.text, pos=pos)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error("expected expression")


def _is_negative(lit) -> bool:
    import math
    return math.copysign(1.0, lit.value) < 0 if isinstance(lit, A.FloatLit) else lit.value < 0


def parse_text(text: str) -> A.Shader:
    p = _Parser(text)
    shader = p.shader()
    for n in A.walk(shader):
        if isinstance(n, A.IntLit) and not (-(1 << 31) <= n.value < (1 << 31)):
            raise ParseError("integer literal out of range", *n.pos)
    A.renumber(shader, 1)
    return shader


def parse(src) -> A.Shader:
    """Parse a ``SourceShader`` (or plain text) into an AST with positions and node ids."""
    text = src.text if isinstance(src, SourceShader) else src
    return parse_text(text)
