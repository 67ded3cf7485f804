"""Tree-walking reference interpreter.

This is the oracle the IR path is checked against: it evaluates the typed AST
directly, sharing only the binary32 primitives and the input/sampler/hash
definitions with the IR runtime.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .. import fp32 as F
from ..runtime.env import ExecEnv, ExecResult, canonical_hash, sample, seed_lanes, uniform_lanes
from . import ast as A
from . import types as T


class _Trap(Exception):
    pass


class _Budget(Exception):
    pass


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def _lanes(v):
    return v if isinstance(v, tuple) else (v,)


def _lanewise(f, a, b):
    ta, tb = isinstance(a, tuple), isinstance(b, tuple)
    if ta and tb:
        return tuple(map(f, a, b))
    if ta:
        return tuple(f(x, b) for x in a)
    if tb:
        return tuple(f(a, y) for y in b)
    return f(a, b)


def _map(f, a):
    return tuple(map(f, a)) if isinstance(a, tuple) else f(a)


def _iadd(a, b):
    return F.wrap32(a + b)


def _isub(a, b):
    return F.wrap32(a - b)


def _imul(a, b):
    return F.wrap32(a * b)


def _idiv(a, b):
    if b == 0:
        raise _Trap("IntDivByZero")
    return F.sdiv(a, b)


_FLOAT_OPS = {"+": F.fadd, "-": F.fsub, "*": F.fmul, "/": F.fdiv}
_INT_OPS = {"+": _iadd, "-": _isub, "*": _imul, "/": _idiv}


def convert(value, src_base: str, dst_base: str):
    if src_base == dst_base:
        return value
    if dst_base == "float":
        return F.sitofp(value) if src_base == "int" else (1.0 if value else 0.0)
    if dst_base == "int":
        return F.fptosi(value) if src_base == "float" else (1 if value else 0)
    return value != 0


def dot(a, b):
    a, b = _lanes(a), _lanes(b)
    acc = F.fmul(a[0], b[0])
    for x, y in zip(a[1:], b[1:]):
        acc = F.fadd(acc, F.fmul(x, y))
    return acc


def normalize(v):
    r = F.frsq(dot(v, v))
    return _map(lambda x: F.fmul(x, r), v)


class Interpreter:
    def __init__(self, shader: A.Shader, env: ExecEnv):
        self.shader = shader
        self.env = env
        self.steps = 0
        self.functions = {f.name: f for f in shader.functions}
        self.globals: dict[str, object] = {}
        self.samplers: dict[str, int] = {}
        self.written: set[str] = set()
        n_in = n_uni = n_smp = 0
        for g in shader.globals:
            if g.qualifier == "in":
                self.globals[g.name] = self._pack(seed_lanes(env.input_seed, n_in, T.size(g.type)))
                n_in += 1
            elif g.type == "sampler2D":
                self.samplers[g.name] = n_smp
                n_smp += 1
            elif g.qualifier == "uniform":
                self.globals[g.name] = self._pack(uniform_lanes(env, g.name, n_uni, T.size(g.type)))
                n_uni += 1
            else:
                self.globals[g.name] = T.zero(g.type)
        self.outputs = [g.name for g in shader.globals if g.qualifier == "out"]
        self.scopes: list[dict] = []

    @staticmethod
    def _pack(lanes):
        return lanes[0] if len(lanes) == 1 else tuple(lanes)

    def tick(self):
        self.steps += 1
        if self.steps >= self.env.step_budget:
            raise _Budget()

    # -- variables
    def lookup_scope(self, name: str):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope
        return None

    def read(self, name: str):
        scope = self.lookup_scope(name)
        if scope is not None:
            return scope[name]
        return self.globals[name]

    def write(self, name: str, value) -> None:
        scope = self.lookup_scope(name)
        if scope is not None:
            scope[name] = value
        else:
            self.globals[name] = value
            self.written.add(name)

    # -- statements
    def run_block(self, stmts: Sequence[A.Stmt]) -> None:
        self.scopes.append({})
        try:
            for s in stmts:
                self.exec(s)
        finally:
            self.scopes.pop()

    def exec(self, s: A.Stmt) -> None:
        self.tick()
        if isinstance(s, A.Assign):
            v = self.eval(s.value)
            if s.op != "=":
                v = self.arith(s.op[0], self.read(s.target), v, self._target_type(s.target))
            self.write(s.target, v)
        elif isinstance(s, A.VarDecl):
            v = self.eval(s.init) if s.init is not None else T.zero(s.type)
            self.scopes[-1][s.name] = v
        elif isinstance(s, A.IncDec):
            cur = self.read(s.target)
            if isinstance(cur, float):
                v = F.fadd(cur, 1.0) if s.op == "++" else F.fsub(cur, 1.0)
            else:
                v = F.wrap32(cur + 1) if s.op == "++" else F.wrap32(cur - 1)
            self.write(s.target, v)
        elif isinstance(s, A.Block):
            self.run_block(s.stmts)
        elif isinstance(s, A.If):
            if self.eval(s.cond):
                self.run_block(s.then.stmts)
            elif isinstance(s.els, A.If):
                self.exec(s.els)
            elif s.els is not None:
                self.run_block(s.els.stmts)
        elif isinstance(s, A.Switch):
            self.exec_switch(s)
        elif isinstance(s, A.For):
            self.scopes.append({})
            try:
                if s.init is not None:
                    self.exec(s.init)
                while True:
                    self.tick()
                    if s.cond is not None and not self.eval(s.cond):
                        break
                    try:
                        self.run_block(s.body.stmts)
                    except _Break:
                        break
                    except _Continue:
                        pass
                    if s.step is not None:
                        self.exec(s.step)
            finally:
                self.scopes.pop()
        elif isinstance(s, A.While):
            while True:
                self.tick()
                if not self.eval(s.cond):
                    break
                try:
                    self.run_block(s.body.stmts)
                except _Break:
                    break
                except _Continue:
                    pass
        elif isinstance(s, A.DoWhile):
            while True:
                self.tick()
                try:
                    self.run_block(s.body.stmts)
                except _Break:
                    break
                except _Continue:
                    pass
                if not self.eval(s.cond):
                    break
        elif isinstance(s, A.Break):
            raise _Break()
        elif isinstance(s, A.Continue):
            raise _Continue()
        elif isinstance(s, A.Return):
            raise _Return(None if s.value is None else self.eval(s.value))
        else:
            raise TypeError(type(s).__name__)

    def exec_switch(self, s: A.Switch) -> None:
        sel = self.eval(s.selector)
        start = None
        for i, case in enumerate(s.cases):
            if case.label == sel:
                start = i
                break
        if start is None:
            for i, case in enumerate(s.cases):
                if case.label is None:
                    start = i
                    break
        if start is None:
            return
        self.scopes.append({})
        try:
            for case in s.cases[start:]:
                for c in case.body:
                    self.exec(c)
        except _Break:
            pass
        finally:
            self.scopes.pop()

    def _target_type(self, name: str) -> str:
        v = self.read(name)
        if isinstance(v, tuple):
            v = v[0]
        return "bool" if isinstance(v, bool) else ("float" if isinstance(v, float) else "int")

    # -- expressions
    def arith(self, op: str, a, b, base: str):
        return _lanewise((_FLOAT_OPS if base == "float" else _INT_OPS)[op], a, b)

    def eval(self, e: A.Expr):
        if isinstance(e, A.FloatLit):
            return e.value
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.BoolLit):
            return e.value
        if isinstance(e, A.Var):
            return self.read(e.name)
        if isinstance(e, A.Binary):
            a = self.eval(e.left)
            b = self.eval(e.right)
            op = e.op
            if op in _FLOAT_OPS:
                return self.arith(op, a, b, T.base(e.ty))
            if op == "<":
                return a < b
            if op == ">":
                return a > b
            if op == "<=":
                return a <= b
            if op == ">=":
                return a >= b
            if op == "==":
                return all(x == y for x, y in zip(_lanes(a), _lanes(b)))
            if op == "!=":
                return not all(x == y for x, y in zip(_lanes(a), _lanes(b)))
            if op == "&&":
                return a and b
            return a or b
        if isinstance(e, A.Unary):
            v = self.eval(e.operand)
            if e.op == "!":
                return not v
            if T.base(e.ty) == "float":
                return _map(F.fneg, v)
            return _map(lambda x: F.wrap32(-x), v)
        if isinstance(e, A.Swizzle):
            base = self.eval(e.base)
            idx = T.swizzle_indices(e.comps)
            return base[idx[0]] if len(idx) == 1 else tuple(base[i] for i in idx)
        if isinstance(e, A.Call):
            return self.call(e)
        raise TypeError(type(e).__name__)

    def call(self, e: A.Call):
        name = e.name
        if name in T.VALUE_TYPES:
            return self.construct(e)
        if name == "texture2D":
            unit = self.samplers[e.args[0].name]
            return sample(unit, self.eval(e.args[1]), self.env)
        args = [self.eval(a) for a in e.args]
        if name == "mix":
            x, y, c = args
            if isinstance(c, tuple):
                return tuple(map(F.fmix, x, y, c))
            if isinstance(x, tuple):
                return tuple(F.fmix(a, b, c) for a, b in zip(x, y))
            return F.fmix(x, y, c)
        if name == "clamp":
            x, lo, hi = args
            return _lanewise(F.fmin, _lanewise(F.fmax, x, lo), hi)
        if name == "min":
            return _lanewise(F.fmin, args[0], args[1])
        if name == "max":
            return _lanewise(F.fmax, args[0], args[1])
        if name == "dot":
            return dot(args[0], args[1])
        if name == "normalize":
            return normalize(args[0])
        unary = {"abs": F.fabs, "sqrt": F.fsqrt, "inversesqrt": F.frsq, "sin": F.fsin,
                 "cos": F.fcos, "floor": F.ffloor}.get(name)
        if unary is not None:
            return _map(unary, args[0])
        return self.call_user(self.functions[name], args)

    def call_user(self, fn: A.FunctionDecl, args: list):
        saved = self.scopes
        self.scopes = [{p.name: a for p, a in zip(fn.params, args)}]
        try:
            self.run_block(fn.body.stmts)
        except _Return as r:
            return r.value
        finally:
            self.scopes = saved
        return T.zero(fn.ret_type)

    def construct(self, e: A.Call):
        target = e.name
        dst = T.base(target)
        n = T.size(target)
        comps = []
        for a in e.args:
            v = self.eval(a)
            src = T.base(a.ty)
            comps.extend(convert(x, src, dst) for x in _lanes(v))
        if n == 1:
            return comps[0]
        if len(e.args) == 1 and T.size(e.args[0].ty) == 1:
            return (comps[0],) * n
        return tuple(comps[:n])

    # -- entry
    def run(self, observed: Optional[Sequence[str]] = None) -> ExecResult:
        main = self.functions["main"]
        try:
            self.scopes = [{}]
            try:
                self.run_block(main.body.stmts)
            except _Return:
                pass
        except _Trap as t:
            return ExecResult("Trap", None, self.steps, reason=str(t))
        except _Budget:
            return ExecResult("StepBudgetExceeded", None, self.steps)
        outputs = {name: _lanes(self.globals[name]) for name in self.outputs}
        diags = [f"output {o!r} not written; defaulted to 0.0" for o in self.outputs if o not in self.written]
        h = canonical_hash(outputs, observed)
        return ExecResult("Ok", h, self.steps, outputs, diagnostics=diags)


def interpret(shader: A.Shader, env: ExecEnv, observed: Optional[Sequence[str]] = None) -> ExecResult:
    """Evaluate a typechecked shader directly; hash covers ``observed`` outputs (default all)."""
    return Interpreter(shader, env).run(observed)
