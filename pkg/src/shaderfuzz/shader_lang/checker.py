"""Static checking: name resolution, type annotation and builtin signatures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import ast as A
from . import types as T
from .errors import ShaderTypeError, TypeErrorKind as K

GEN = ("float", "vec2", "vec3", "vec4")
UNARY_BUILTINS = {"abs", "sqrt", "inversesqrt", "sin", "cos", "floor", "normalize"}
BUILTINS = UNARY_BUILTINS | {"mix", "clamp", "min", "max", "dot", "texture2D"}
CONSTRUCTORS = set(T.VALUE_TYPES)


@dataclass
class Symbol:
    name: str
    type: str
    kind: str  # global | local | param
    qualifier: Optional[str] = None
    precision: Optional[str] = None


def _err(kind, msg, node):
    raise ShaderTypeError(kind, msg, node.pos)


class Checker:
    def __init__(self, shader: A.Shader):
        self.shader = shader
        self.scopes: list[dict[str, Symbol]] = []
        self.functions: dict[str, A.FunctionDecl] = {}
        self.fn: Optional[A.FunctionDecl] = None
        self.loops = 0
        self.switches = 0
        self.warnings: list[str] = []

    # -- scopes
    def lookup(self, name: str) -> Optional[Symbol]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def declare(self, sym: Symbol, node: A.Node) -> None:
        if sym.name in self.scopes[-1]:
            _err(K.Redeclaration, f"{sym.name!r} already declared in this scope", node)
        if sym.name in BUILTINS or sym.name in CONSTRUCTORS:
            _err(K.Redeclaration, f"{sym.name!r} is a builtin name", node)
        if self.lookup(sym.name) is not None:
            self.warnings.append(f"{node.pos[0]}:{node.pos[1]}: {sym.name!r} shadows an outer declaration")
        self.scopes[-1][sym.name] = sym

    # -- top level
    def run(self) -> A.Shader:
        self.scopes = [{}]
        for g in self.shader.globals:
            self.check_global(g)
        mains = [f for f in self.shader.functions if f.name == "main"]
        if len(mains) != 1:
            node = mains[1] if len(mains) > 1 else self.shader
            _err(K.MultipleMain, f"expected exactly one main, found {len(mains)}", node)
        for fn in self.shader.functions:
            self.check_function(fn)
        self.check_outputs(mains[0])
        self.shader.diagnostics = list(self.warnings)
        return self.shader

    def check_global(self, g: A.GlobalDecl) -> None:
        if g.type == "sampler2D":
            if g.qualifier != "uniform":
                _err(K.InvalidQualifier, "sampler2D must be a uniform", g)
            if g.precision is not None:
                _err(K.InvalidQualifier, "sampler2D takes no precision", g)
        elif g.type not in GEN:
            _err(K.InvalidQualifier, f"{g.qualifier} globals must be float or vecN, got {g.type}", g)
        self.declare(Symbol(g.name, g.type, "global", g.qualifier, g.precision), g)

    def check_function(self, fn: A.FunctionDecl) -> None:
        if fn.name in self.functions:
            _err(K.Redeclaration, f"function {fn.name!r} redefined", fn)
        if fn.name in BUILTINS or fn.name in CONSTRUCTORS:
            _err(K.Redeclaration, f"{fn.name!r} is a builtin name", fn)
        if fn.name == "main":
            if fn.params:
                _err(K.ArityMismatch, "main takes no parameters", fn)
            if fn.ret_type != "void":
                _err(K.TypeMismatch, "main must return void", fn)
        elif fn.ret_type != "void" and not T.is_value(fn.ret_type):
            _err(K.TypeMismatch, f"invalid return type {fn.ret_type}", fn)
        self.fn = fn
        self.scopes.append({})
        for p in fn.params:
            if not T.is_value(p.type):
                _err(K.TypeMismatch, f"invalid parameter type {p.type}", p)
            self.declare(Symbol(p.name, p.type, "param"), p)
        self.block(fn.body, new_scope=False)
        self.scopes.pop()
        # registered after the body so a function cannot call itself
        self.functions[fn.name] = fn
        self.fn = None

    # -- statements
    def block(self, b: A.Block, new_scope: bool = True) -> None:
        if new_scope:
            self.scopes.append({})
        for s in b.stmts:
            self.stmt(s)
        if new_scope:
            self.scopes.pop()

    def assign_target(self, name: str, node: A.Node) -> Symbol:
        sym = self.lookup(name)
        if sym is None:
            _err(K.UndeclaredIdentifier, f"undeclared identifier {name!r}", node)
        if sym.kind == "global":
            if sym.qualifier in ("in", "uniform"):
                _err(K.InvalidQualifier, f"cannot assign to {sym.qualifier} variable {name!r}", node)
            if self.fn is not None and self.fn.name != "main":
                _err(K.InvalidQualifier, f"outputs may only be written in main ({name!r})", node)
        return sym

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.Block):
            self.block(s)
        elif isinstance(s, A.VarDecl):
            if not T.is_value(s.type):
                _err(K.TypeMismatch, f"invalid variable type {s.type}", s)
            if s.precision == "mediump" and T.base(s.type) != "float":
                _err(K.InvalidQualifier, "mediump applies to float types only", s)
            if s.init is not None:
                t = self.expr(s.init)
                if t != s.type:
                    _err(K.TypeMismatch, f"cannot initialise {s.type} with {t}", s)
            self.declare(Symbol(s.name, s.type, "local", None, s.precision), s)
        elif isinstance(s, A.Assign):
            sym = self.assign_target(s.target, s)
            t = self.expr(s.value)
            if s.op == "=":
                if t != sym.type:
                    _err(K.TypeMismatch, f"cannot assign {t} to {sym.type} {s.target!r}", s)
            else:
                r = self.arith_result(s.op[0], sym.type, t, s)
                if r != sym.type:
                    _err(K.TypeMismatch, f"{s.op} yields {r}, target is {sym.type}", s)
        elif isinstance(s, A.IncDec):
            sym = self.assign_target(s.target, s)
            if sym.type not in ("int", "float"):
                _err(K.TypeMismatch, f"{s.op} needs int or float, got {sym.type}", s)
        elif isinstance(s, A.If):
            self.condition(s.cond)
            self.block(s.then)
            if isinstance(s.els, A.If):
                self.stmt(s.els)
            elif s.els is not None:
                self.block(s.els)
        elif isinstance(s, A.Switch):
            if self.expr(s.selector) != "int":
                _err(K.TypeMismatch, "switch selector must be int", s.selector)
            seen = set()
            for case in s.cases:
                if case.label in seen:
                    _err(K.InvalidStatement, f"duplicate case label {case.label}", case)
                seen.add(case.label)
            self.switches += 1
            self.scopes.append({})
            for case in s.cases:
                for c in case.body:
                    self.stmt(c)
            self.scopes.pop()
            self.switches -= 1
        elif isinstance(s, A.For):
            self.scopes.append({})
            if s.init is not None:
                if not isinstance(s.init, (A.VarDecl, A.Assign, A.IncDec)):
                    _err(K.InvalidStatement, "invalid for-loop initialiser", s.init)
                self.stmt(s.init)
            if s.cond is not None:
                self.condition(s.cond)
            if s.step is not None:
                self.stmt(s.step)
            self.loops += 1
            self.block(s.body)
            self.loops -= 1
            self.scopes.pop()
        elif isinstance(s, A.While):
            self.condition(s.cond)
            self.loops += 1
            self.block(s.body)
            self.loops -= 1
        elif isinstance(s, A.DoWhile):
            self.loops += 1
            self.block(s.body)
            self.loops -= 1
            self.condition(s.cond)
        elif isinstance(s, A.Break):
            if self.loops == 0 and self.switches == 0:
                _err(K.InvalidStatement, "break outside loop or switch", s)
        elif isinstance(s, A.Continue):
            if self.loops == 0:
                _err(K.InvalidStatement, "continue outside loop", s)
        elif isinstance(s, A.Return):
            rt = self.fn.ret_type
            if s.value is None:
                if rt != "void":
                    _err(K.TypeMismatch, f"missing return value of type {rt}", s)
            else:
                if rt == "void":
                    _err(K.TypeMismatch, "void function returns a value", s)
                t = self.expr(s.value)
                if t != rt:
                    _err(K.TypeMismatch, f"returning {t} from function of type {rt}", s)
        else:
            _err(K.InvalidStatement, f"unsupported statement {type(s).__name__}", s)

    def condition(self, e: A.Expr) -> None:
        t = self.expr(e)
        if t != "bool":
            _err(K.TypeMismatch, f"condition must be bool, got {t}", e)

    # -- expressions
    def arith_result(self, op: str, lt: str, rt: str, node) -> str:
        if lt not in T.NUMERIC_TYPES or rt not in T.NUMERIC_TYPES:
            _err(K.TypeMismatch, f"operator {op} needs numeric operands, got {lt} and {rt}", node)
        if T.base(lt) != T.base(rt):
            _err(K.TypeMismatch, f"operator {op} mixes {lt} and {rt}", node)
        if lt == rt:
            return lt
        if T.size(lt) == 1:
            return rt
        if T.size(rt) == 1:
            return lt
        _err(K.TypeMismatch, f"operator {op} size mismatch {lt} vs {rt}", node)

    def expr(self, e: A.Expr) -> str:
        t = self._expr(e)
        e.ty = t
        return t

    def _expr(self, e: A.Expr) -> str:
        if isinstance(e, A.FloatLit):
            return "float"
        if isinstance(e, A.IntLit):
            return "int"
        if isinstance(e, A.BoolLit):
            return "bool"
        if isinstance(e, A.Var):
            sym = self.lookup(e.name)
            if sym is None:
                _err(K.UndeclaredIdentifier, f"undeclared identifier {e.name!r}", e)
            if sym.type == "sampler2D":
                _err(K.TypeMismatch, "samplers may only appear as texture2D's first argument", e)
            if sym.kind == "global" and sym.qualifier == "out" and self.fn.name != "main":
                _err(K.InvalidQualifier, f"outputs may only be accessed in main ({e.name!r})", e)
            return sym.type
        if isinstance(e, A.Unary):
            t = self.expr(e.operand)
            if e.op == "-":
                if t not in T.NUMERIC_TYPES:
                    _err(K.TypeMismatch, f"unary - needs numeric operand, got {t}", e)
                return t
            if t != "bool":
                _err(K.TypeMismatch, f"! needs bool, got {t}", e)
            return "bool"
        if isinstance(e, A.Binary):
            lt = self.expr(e.left)
            rt = self.expr(e.right)
            op = e.op
            if op in ("+", "-", "*", "/"):
                return self.arith_result(op, lt, rt, e)
            if op in ("<", ">", "<=", ">="):
                if lt != rt or lt not in ("float", "int"):
                    _err(K.TypeMismatch, f"{op} needs matching scalar numbers, got {lt} and {rt}", e)
                return "bool"
            if op in ("==", "!="):
                if lt != rt:
                    _err(K.TypeMismatch, f"{op} compares {lt} with {rt}", e)
                return "bool"
            if lt != "bool" or rt != "bool":
                _err(K.TypeMismatch, f"{op} needs bool operands", e)
            return "bool"
        if isinstance(e, A.Swizzle):
            bt = self.expr(e.base)
            if not T.is_vector(bt):
                _err(K.TypeMismatch, f"swizzle on non-vector {bt}", e)
            idx = T.swizzle_indices(e.comps)
            if idx is None or len(idx) > 4 or max(idx) >= T.size(bt):
                _err(K.TypeMismatch, f"invalid swizzle .{e.comps} on {bt}", e)
            return T.make(T.base(bt), len(idx))
        if isinstance(e, A.Call):
            return self.call(e)
        _err(K.TypeMismatch, f"unsupported expression {type(e).__name__}", e)

    def call(self, e: A.Call) -> str:
        name = e.name
        if name in CONSTRUCTORS:
            return self.constructor(e)
        if name == "texture2D":
            if len(e.args) != 2:
                _err(K.ArityMismatch, "texture2D takes 2 arguments", e)
            s = e.args[0]
            sym = self.lookup(s.name) if isinstance(s, A.Var) else None
            if sym is None or sym.type != "sampler2D":
                _err(K.TypeMismatch, "texture2D expects a sampler2D uniform", e)
            s.ty = "sampler2D"
            if self.expr(e.args[1]) != "vec2":
                _err(K.TypeMismatch, "texture2D coordinates must be vec2", e)
            return "vec4"
        if name in BUILTINS:
            ts = [self.expr(a) for a in e.args]
            return self.builtin(name, ts, e)
        fn = self.functions.get(name)
        if fn is None:
            _err(K.UndeclaredIdentifier, f"undeclared function {name!r}", e)
        if len(e.args) != len(fn.params):
            _err(K.ArityMismatch, f"{name} takes {len(fn.params)} arguments, got {len(e.args)}", e)
        for a, p in zip(e.args, fn.params):
            t = self.expr(a)
            if t != p.type:
                _err(K.TypeMismatch, f"argument {p.name!r} of {name} expects {p.type}, got {t}", a)
        if fn.ret_type == "void":
            _err(K.TypeMismatch, f"void function {name} used as a value", e)
        return fn.ret_type

    def builtin(self, name: str, ts: list[str], e) -> str:
        arity = 1 if name in UNARY_BUILTINS else {"mix": 3, "clamp": 3, "min": 2, "max": 2, "dot": 2}[name]
        if len(ts) != arity:
            _err(K.ArityMismatch, f"{name} takes {arity} arguments, got {len(ts)}", e)
        t0 = ts[0]
        if t0 not in GEN:
            _err(K.TypeMismatch, f"{name} expects float or vecN, got {t0}", e)
        if name in UNARY_BUILTINS:
            return t0
        if name == "dot":
            if ts[1] != t0:
                _err(K.TypeMismatch, f"dot({t0}, {ts[1]})", e)
            return "float"
        if name == "mix":
            if ts[1] != t0 or ts[2] not in ("float", t0):
                _err(K.TypeMismatch, f"mix({', '.join(ts)})", e)
            return t0
        if name in ("min", "max"):
            if ts[1] not in ("float", t0):
                _err(K.TypeMismatch, f"{name}({', '.join(ts)})", e)
            return t0
        # clamp
        if not ((ts[1] == ts[2] == "float") or (ts[1] == ts[2] == t0)):
            _err(K.TypeMismatch, f"clamp({', '.join(ts)})", e)
        return t0

    def constructor(self, e: A.Call) -> str:
        target = e.name
        ts = [self.expr(a) for a in e.args]
        if not ts:
            _err(K.ArityMismatch, f"{target} constructor needs arguments", e)
        for t in ts:
            if not T.is_value(t):
                _err(K.TypeMismatch, f"cannot construct from {t}", e)
        n = T.size(target)
        if n == 1:
            if len(ts) != 1:
                _err(K.ArityMismatch, f"{target}() takes one argument", e)
            return target
        if len(ts) == 1 and (T.size(ts[0]) == 1 or T.size(ts[0]) >= n):
            return target
        total = sum(T.size(t) for t in ts)
        if total != n:
            _err(K.ArityMismatch, f"{target} needs {n} components, got {total}", e)
        return target

    # -- output coverage warnings
    def check_outputs(self, main: A.FunctionDecl) -> None:
        outs = [g.name for g in self.shader.globals if g.qualifier == "out"]
        if not outs:
            return
        may: set[str] = set()
        for n in A.walk(main.body):
            if isinstance(n, (A.Assign, A.IncDec)):
                may.add(n.target)
        must = _must_assign(main.body.stmts, set(outs))
        for o in outs:
            if o not in may:
                self.warnings.append(f"output {o!r} is never written")
            elif must is not None and o not in must:
                self.warnings.append(f"output {o!r} is not written on every path")


_ALL = None  # marker: path does not reach the end (vacuously assigns everything)


def _must_assign(stmts, outs):
    done: set[str] = set()
    for s in stmts:
        r = _must_stmt(s, outs)
        if r is _ALL:
            return _ALL
        done |= r
    return done


def _meet(a, b):
    if a is _ALL:
        return b
    if b is _ALL:
        return a
    return a & b


def _must_stmt(s, outs):
    if isinstance(s, (A.Assign, A.IncDec)):
        return {s.target} & outs
    if isinstance(s, A.Block):
        return _must_assign(s.stmts, outs)
    if isinstance(s, A.If):
        t = _must_assign(s.then.stmts, outs)
        if s.els is None:
            e = set()
        elif isinstance(s.els, A.If):
            e = _must_stmt(s.els, outs)
        else:
            e = _must_assign(s.els.stmts, outs)
        return _meet(t, e)
    if isinstance(s, A.DoWhile):
        r = _must_assign(s.body.stmts, outs)
        return set() if r is _ALL else r
    if isinstance(s, A.Return):
        return _ALL
    return set()


def typecheck(shader: A.Shader) -> A.Shader:
    """Annotate every expression with its type; raises ShaderTypeError.

    Warnings (shadowing, partially written outputs) land in ``shader.diagnostics``.
    """
    return Checker(shader).run()
