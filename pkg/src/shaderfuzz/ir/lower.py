"""Lowering of a typechecked AST into SSA form.

SSA is built on the fly (Braun et al., "Simple and Efficient Construction of
Static Single Assignment Form"): variables are tracked per block, phis are
created lazily and trivial ones removed as soon as their block is sealed.
User functions are inlined at every call site, so the module holds a single
entry function.
"""

from __future__ import annotations

from typing import Optional

from ..shader_lang import ast as A
from ..shader_lang import types as T
from .core import (ENTRY_NAME, FGET, FSET, MIX, RSQ, SAMPLER, Block, Const, Function, GlobalRef,
                   GlobalSlot, Inst, Module, Undef, elem, lanes, vec, with_elem, zero_const)


class LoweringUnsupported(Exception):
    pass


_BASE = {"float": "float", "int": "i32", "bool": "i1"}
_ROLE = {"in": "Input", "out": "Output", "uniform": "Uniform"}
_UNARY_MATH = {"abs": "llvm.qgpu.fabs", "sqrt": "llvm.qgpu.fsqrt", "inversesqrt": RSQ,
               "sin": "llvm.qgpu.fsin", "cos": "llvm.qgpu.fcos", "floor": "llvm.qgpu.ffloor"}
_FCMP = {"<": "olt", ">": "ogt", "<=": "ole", ">=": "oge", "==": "oeq", "!=": "une"}
_ICMP = {"<": "slt", ">": "sgt", "<=": "sle", ">=": "sge", "==": "eq", "!=": "ne"}
_FARITH = {"+": "fadd", "-": "fsub", "*": "fmul", "/": "fdiv"}
_IARITH = {"+": "add", "-": "sub", "*": "mul", "/": "sdiv"}


def ir_type(ty: str, precision: Optional[str] = None) -> str:
    if ty == "sampler2D":
        return "sampler"
    b = _BASE[T.base(ty)]
    if precision == "mediump" and b == "float":
        b = "half"
    return vec(b, T.size(ty))


def _i32(v: int) -> Const:
    return Const("i32", v)


class _Var:
    __slots__ = ("key", "ty", "slot")

    def __init__(self, key: int, ty: str, slot: Optional[str] = None):
        self.key = key
        self.ty = ty
        self.slot = slot  # output slot written alongside the SSA variable


class _Frame:
    def __init__(self, ret_key: Optional[int], ret_block: Optional[Block]):
        self.ret_key = ret_key
        self.ret_block = ret_block


class Lowerer:
    def __init__(self, shader: A.Shader, name: str):
        self.shader = shader
        self.module = Module(name)
        self.fn = Function(ENTRY_NAME)
        self.module.functions.append(self.fn)
        self.functions = {f.name: f for f in shader.functions}
        self.next_id = 0
        self.next_label = 0
        self.next_key = 0
        self.cur: Optional[Block] = None
        self.defs: dict[int, dict[str, object]] = {}
        self.var_ty: dict[int, str] = {}
        self.sealed: set[str] = set()
        self.incomplete: dict[str, dict[int, Inst]] = {}
        self.preds: dict[str, list[str]] = {}
        self.blocks: dict[str, Block] = {}
        self.phi_block: dict[int, Block] = {}
        self.users: dict[int, list[Inst]] = {}
        self.alias: dict[int, object] = {}
        self.dead: list[Inst] = []  # removed phis stay alive so their id() keys are never reused
        self.scopes: list[dict[str, object]] = []
        self.loops: list[tuple[Block, Block]] = []  # (break target, continue target)
        self.frames: list[_Frame] = []
        self.inputs: dict[str, tuple[str, str]] = {}
        self.uniforms: dict[str, tuple[str, str]] = {}
        self.samplers: dict[str, int] = {}

    # ---------------------------------------------------------------- blocks
    def new_block(self, hint: str = "bb") -> Block:
        b = Block(f"{hint}{self.next_label}")
        self.next_label += 1
        self.blocks[b.label] = b
        self.preds[b.label] = []
        return b

    def start(self, b: Block) -> None:
        self.fn.blocks.append(b)
        self.cur = b

    def seal(self, b: Block) -> None:
        for key, phi in self.incomplete.pop(b.label, {}).items():
            self.add_phi_operands(key, phi, b)
        self.sealed.add(b.label)

    def edge(self, target: Block) -> None:
        self.preds[target.label].append(self.cur.label)

    def br(self, target: Block) -> None:
        self.edge(target)
        self.emit_void("br", [], target.label)
        self.cur = None

    def condbr(self, c, t: Block, f: Block) -> None:
        self.edge(t)
        self.edge(f)
        self.emit_void("condbr", [c], (t.label, f.label))
        self.cur = None

    # ---------------------------------------------------------------- emission
    def emit(self, op: str, ty: str, args: list, attrs=None) -> Inst:
        # an operand read earlier may be a phi removed as trivial since
        args = [self.resolve(a) for a in args]
        inst = Inst(self.next_id, op, ty, args, attrs)
        self.next_id += 1
        self.cur.insts.append(inst)
        self._track(inst)
        return inst

    def emit_void(self, op: str, args: list, attrs=None) -> Inst:
        args = [self.resolve(a) for a in args]
        inst = Inst(None, op, "void", args, attrs)
        self.cur.insts.append(inst)
        self._track(inst)
        return inst

    def _track(self, inst: Inst) -> None:
        for a in inst.args:
            if type(a) is Inst:
                self.users.setdefault(id(a), []).append(inst)

    # ---------------------------------------------------------------- SSA variables
    def new_var(self, ty: str, slot: Optional[str] = None) -> _Var:
        v = _Var(self.next_key, ty, slot)
        self.next_key += 1
        self.var_ty[v.key] = ty
        self.defs[v.key] = {}
        return v

    def resolve(self, v):
        while type(v) is Inst and id(v) in self.alias:
            v = self.alias[id(v)]
        return v

    def write_var(self, key: int, block: Block, value) -> None:
        self.defs[key][block.label] = value

    def read_var(self, key: int, block: Block):
        d = self.defs[key]
        if block.label in d:
            v = self.resolve(d[block.label])
            d[block.label] = v
            return v
        return self.read_var_recursive(key, block)

    def read_var_recursive(self, key: int, block: Block):
        ty = self.var_ty[key]
        preds = self.preds[block.label]
        if block.label not in self.sealed:
            val = self.new_phi(ty, block)
            self.incomplete.setdefault(block.label, {})[key] = val
        elif len(preds) == 1:
            val = self.read_var(key, self.blocks[preds[0]])
        elif not preds:
            val = Undef(ty)
        else:
            phi = self.new_phi(ty, block)
            self.write_var(key, block, phi)
            val = self.add_phi_operands(key, phi, block)
        self.write_var(key, block, val)
        return val

    def new_phi(self, ty: str, block: Block) -> Inst:
        phi = Inst(self.next_id, "phi", ty, [], [])
        self.next_id += 1
        k = 0
        while k < len(block.insts) and block.insts[k].op == "phi":
            k += 1
        block.insts.insert(k, phi)
        self.phi_block[id(phi)] = block
        return phi

    def add_phi_operands(self, key: int, phi: Inst, block: Block):
        for p in self.preds[block.label]:
            v = self.read_var(key, self.blocks[p])
            phi.args.append(v)
            phi.attrs.append(p)
            if type(v) is Inst:
                self.users.setdefault(id(v), []).append(phi)
        return self.try_remove_trivial_phi(phi)

    def try_remove_trivial_phi(self, phi: Inst):
        same = None
        for op in phi.args:
            op = self.resolve(op)
            if op is same or op is phi:
                continue
            if same is not None:
                if type(op) is Const and type(same) is Const and op.key() == same.key():
                    continue
                return phi
            same = op
        if same is None:
            same = Undef(phi.ty)
        block = self.phi_block[id(phi)]
        block.insts[:] = [i for i in block.insts if i is not phi]
        self.dead.append(phi)
        self.alias[id(phi)] = same
        users = [u for u in self.users.pop(id(phi), []) if u is not phi]
        for u in users:
            u.args = [same if a is phi else a for a in u.args]
            if type(same) is Inst:
                self.users.setdefault(id(same), []).append(u)
        for u in users:
            if u.op == "phi" and id(u) not in self.alias and any(i is u for i in self.phi_block[id(u)].insts):
                self.try_remove_trivial_phi(u)
        # the cascade above may have removed same as well
        return self.resolve(same)

    # ---------------------------------------------------------------- scopes
    def lookup(self, name: str):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise LoweringUnsupported(f"unresolved identifier {name!r}")

    def declare(self, name: str, ty: str, value) -> _Var:
        v = self.new_var(ty)
        self.scopes[-1][name] = v
        self.write_var(v.key, self.cur, value)
        return v

    # ---------------------------------------------------------------- entry
    def run(self) -> Module:
        m = self.module
        n_smp = 0
        self.scopes.append({})
        entry = self.new_block("entry")
        entry.label = "entry"
        self.blocks = {"entry": entry}
        self.preds = {"entry": []}
        self.start(entry)
        self.seal(entry)
        for g in self.shader.globals:
            if g.type == "sampler2D":
                m.globals.append(GlobalSlot(g.name, "sampler", "Uniform"))
                self.samplers[g.name] = n_smp
                n_smp += 1
                continue
            slot_ty = ir_type(g.type)
            m.globals.append(GlobalSlot(g.name, slot_ty, _ROLE[g.qualifier]))
            var_ty = ir_type(g.type, g.precision)
            if g.qualifier == "out":
                v = self.new_var(var_ty, g.name)
                self.scopes[0][g.name] = v
                self.write_var(v.key, self.cur, zero_const(var_ty))
            elif g.qualifier == "in":
                self.scopes[0][g.name] = ("in", slot_ty, var_ty)
            else:
                self.scopes[0][g.name] = ("uniform", slot_ty, var_ty)
        main = self.functions.get("main")
        if main is None:
            raise LoweringUnsupported("no main function")
        self.scopes.append({})
        self.stmts(main.body.stmts)
        self.scopes.pop()
        if self.cur is not None:
            self.emit_void("ret", [])
            self.cur = None
        return m

    # ---------------------------------------------------------------- statements
    def stmts(self, stmts) -> None:
        for s in stmts:
            if self.cur is None:
                return  # the rest of the block is unreachable
            self.stmt(s)

    def scoped(self, stmts) -> None:
        self.scopes.append({})
        self.stmts(stmts)
        self.scopes.pop()

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.VarDecl):
            ty = ir_type(s.type, s.precision)
            val = self.coerce(self.expr(s.init), ty) if s.init is not None else zero_const(ty)
            self.declare(s.name, ty, val)
        elif isinstance(s, A.Assign):
            var = self.lookup(s.target)
            val = self.expr(s.value)
            if s.op != "=":
                cur = self.read_var(var.key, self.cur)
                val = self.arith(s.op[0], cur, val, T.base(s.value.ty) if T.base(s.value.ty) != "bool" else "int")
            self.assign(var, val)
        elif isinstance(s, A.IncDec):
            var = self.lookup(s.target)
            cur = self.read_var(var.key, self.cur)
            if elem(var.ty) == "i32":
                val = self.emit("add" if s.op == "++" else "sub", var.ty, [cur, _i32(1)])
            else:
                one = Const(var.ty, 1.0)
                val = self.emit("fadd" if s.op == "++" else "fsub", var.ty, [cur, one])
            self.assign(var, val)
        elif isinstance(s, A.Block):
            self.scoped(s.stmts)
        elif isinstance(s, A.If):
            self.lower_if(s)
        elif isinstance(s, A.Switch):
            self.lower_switch(s)
        elif isinstance(s, A.For):
            self.lower_for(s)
        elif isinstance(s, A.While):
            self.lower_while(s)
        elif isinstance(s, A.DoWhile):
            self.lower_do(s)
        elif isinstance(s, A.Break):
            self.br(self.loops[-1][0])
        elif isinstance(s, A.Continue):
            for brk, cont in reversed(self.loops):
                if cont is not None:
                    self.br(cont)
                    return
            raise LoweringUnsupported("continue outside loop")
        elif isinstance(s, A.Return):
            if not self.frames:
                self.emit_void("ret", [])
                self.cur = None
                return
            frame = self.frames[-1]
            if s.value is not None:
                ty = self.var_ty[frame.ret_key]
                self.write_var(frame.ret_key, self.cur, self.coerce(self.expr(s.value), ty))
            self.br(frame.ret_block)
        else:
            raise LoweringUnsupported(type(s).__name__)

    def assign(self, var: _Var, val) -> None:
        val = self.coerce(val, var.ty)
        self.write_var(var.key, self.cur, val)
        if var.slot is not None:
            slot_ty = self.module.slot(var.slot).ty
            self.emit_void("call", [GlobalRef(var.slot), _i32(0), self.coerce(val, slot_ty)], FSET)

    def lower_if(self, s: A.If) -> None:
        c = self.expr(s.cond)
        then_b = self.new_block()
        else_b = self.new_block() if s.els is not None else None
        merge = self.new_block()
        self.condbr(c, then_b, else_b or merge)
        self.seal(then_b)
        self.start(then_b)
        self.scoped(s.then.stmts)
        if self.cur is not None:
            self.br(merge)
        if else_b is not None:
            self.seal(else_b)
            self.start(else_b)
            if isinstance(s.els, A.If):
                self.stmt(s.els)
            else:
                self.scoped(s.els.stmts)
            if self.cur is not None:
                self.br(merge)
        self.finish(merge)

    def finish(self, b: Block) -> None:
        """Seal a join block and continue there, or mark the code unreachable."""
        self.seal(b)
        if self.preds[b.label]:
            self.start(b)
        else:
            self.cur = None

    def lower_while(self, s: A.While) -> None:
        header, body, exit_ = self.new_block(), self.new_block(), self.new_block()
        self.br(header)
        self.start(header)
        self.condbr(self.expr(s.cond), body, exit_)
        self.seal(body)
        self.start(body)
        self.loops.append((exit_, header))
        self.scoped(s.body.stmts)
        self.loops.pop()
        if self.cur is not None:
            self.br(header)
        self.seal(header)
        self.finish(exit_)

    def lower_for(self, s: A.For) -> None:
        self.scopes.append({})
        if s.init is not None:
            self.stmt(s.init)
        header, body, latch, exit_ = (self.new_block() for _ in range(4))
        self.br(header)
        self.start(header)
        if s.cond is not None:
            self.condbr(self.expr(s.cond), body, exit_)
        else:
            self.br(body)
        self.seal(body)
        self.start(body)
        self.loops.append((exit_, latch))
        self.scoped(s.body.stmts)
        self.loops.pop()
        if self.cur is not None:
            self.br(latch)
        self.seal(latch)
        if self.preds[latch.label]:
            self.start(latch)
            if s.step is not None:
                self.stmt(s.step)
            self.br(header)
        self.seal(header)
        self.finish(exit_)
        self.scopes.pop()

    def lower_do(self, s: A.DoWhile) -> None:
        body, cond_b, exit_ = self.new_block(), self.new_block(), self.new_block()
        self.br(body)
        self.start(body)
        self.loops.append((exit_, cond_b))
        self.scoped(s.body.stmts)
        self.loops.pop()
        if self.cur is not None:
            self.br(cond_b)
        self.seal(cond_b)
        if self.preds[cond_b.label]:
            self.start(cond_b)
            self.condbr(self.expr(s.cond), body, exit_)
        self.seal(body)
        self.finish(exit_)

    def lower_switch(self, s: A.Switch) -> None:
        sel = self.expr(s.selector)
        exit_ = self.new_block()
        case_blocks = [self.new_block() for _ in s.cases]
        default = exit_
        table = []
        for case, b in zip(s.cases, case_blocks):
            self.edge(b)
            if case.label is None:
                default = b
            else:
                table.append((case.label, b.label))
        if default is exit_:
            self.edge(exit_)
        self.emit_void("switch", [sel], (default.label, table))
        self.cur = None
        self.scopes.append({})
        # continue inside a switch still targets the enclosing loop
        self.loops.append((exit_, None))
        for k, (case, b) in enumerate(zip(s.cases, case_blocks)):
            if self.cur is not None:
                self.br(b)
            self.seal(b)
            self.start(b)
            self.stmts(case.body)
        if self.cur is not None:
            self.br(exit_)
        self.loops.pop()
        self.scopes.pop()
        self.finish(exit_)

    # ---------------------------------------------------------------- expressions
    def coerce(self, v, ty: str):
        """Convert between half and float of the same shape; other types must match."""
        if v.ty == ty:
            return v
        if lanes(v.ty) != lanes(ty) or {elem(v.ty), elem(ty)} != {"half", "float"}:
            raise LoweringUnsupported(f"cannot coerce {v.ty} to {ty}")
        if type(v) is Const:
            return Const(ty, v.value)
        if type(v) is Undef:
            return Undef(ty)
        return self.emit("fpext" if elem(ty) == "float" else "fptrunc", ty, [v])

    def unify(self, *vals) -> list:
        """Bring float operands to a common precision: half only if every non-constant is half."""
        halves = [v for v in vals if elem(v.ty) == "half"]
        if not halves:
            return list(vals)
        want = "half"
        for v in vals:
            if elem(v.ty) == "float" and type(v) is not Const:
                want = "float"
        return [self.coerce(v, with_elem(v.ty, want)) if elem(v.ty) in ("half", "float") else v
                for v in vals]

    def splat(self, v, n: int):
        ty = vec(v.ty, n)
        if type(v) is Const:
            return Const(ty, (v.value,) * n)
        acc = zero_const(ty)
        for k in range(n):
            acc = self.emit("insertelement", ty, [acc, v, _i32(k)])
        return acc

    def match_shapes(self, a, b):
        na, nb = lanes(a.ty), lanes(b.ty)
        if na == nb:
            return a, b
        if na == 1:
            return self.splat(a, nb), b
        return a, self.splat(b, na)

    def arith(self, op: str, a, b, base: str):
        a, b = self.unify(a, b)
        a, b = self.match_shapes(a, b)
        opc = (_FARITH if base == "float" else _IARITH)[op]
        return self.emit(opc, a.ty, [a, b])

    def expr(self, e: A.Expr):
        if isinstance(e, A.FloatLit):
            return Const("float", e.value)
        if isinstance(e, A.IntLit):
            return Const("i32", e.value)
        if isinstance(e, A.BoolLit):
            return Const("i1", e.value)
        if isinstance(e, A.Var):
            return self.read_name(e.name)
        if isinstance(e, A.Unary):
            v = self.expr(e.operand)
            if e.op == "!":
                return self.emit("xor", v.ty, [v, Const("i1", True)])
            if elem(v.ty) == "i32":
                return self.emit("sub", v.ty, [zero_const(v.ty), v])
            return self.emit("fneg", v.ty, [v])
        if isinstance(e, A.Binary):
            return self.binary(e)
        if isinstance(e, A.Swizzle):
            base = self.expr(e.base)
            idx = T.swizzle_indices(e.comps)
            if len(idx) == 1:
                return self.extract(base, idx[0])
            return self.build(elem(base.ty), [self.extract(base, i) for i in idx])
        if isinstance(e, A.Call):
            return self.call(e)
        raise LoweringUnsupported(type(e).__name__)

    def read_name(self, name: str):
        sym = self.lookup(name)
        if isinstance(sym, _Var):
            return self.read_var(sym.key, self.cur)
        kind, slot_ty, var_ty = sym
        if kind == "in":
            v = self.emit("call", slot_ty, [GlobalRef(name), _i32(0)], FGET)
        else:
            v = self.emit("load", slot_ty, [], name)
        return self.coerce(v, var_ty)

    def extract(self, v, k: int):
        if type(v) is Const:
            return Const(elem(v.ty), v.value[k])
        return self.emit("extractelement", elem(v.ty), [v, _i32(k)])

    def build(self, e: str, comps: list):
        n = len(comps)
        if n == 1:
            return comps[0]
        ty = vec(e, n)
        if all(type(c) is Const for c in comps):
            return Const(ty, tuple(c.value for c in comps))
        acc = zero_const(ty)
        for k, c in enumerate(comps):
            acc = self.emit("insertelement", ty, [acc, c, _i32(k)])
        return acc

    def binary(self, e: A.Binary):
        op = e.op
        a = self.expr(e.left)
        b = self.expr(e.right)
        if op in _FARITH:
            return self.arith(op, a, b, T.base(e.ty))
        if op in ("&&", "||"):
            return self.emit("and" if op == "&&" else "or", "i1", [a, b])
        a, b = self.unify(a, b)
        fl = elem(a.ty) in ("half", "float")
        pred = (_FCMP if fl else _ICMP)[op]
        n = lanes(a.ty)
        c = self.emit("fcmp" if fl else "icmp", vec("i1", n), [a, b], pred)
        if n == 1:
            return c
        # vector equality: lanes compared with oeq/eq, then and-reduced
        if op == "!=":
            c.attrs = "oeq" if fl else "eq"
        acc = self.extract(c, 0)
        for k in range(1, n):
            acc = self.emit("and", "i1", [acc, self.extract(c, k)])
        if op == "!=":
            acc = self.emit("xor", "i1", [acc, Const("i1", True)])
        return acc

    def convert(self, v, dst: str):
        """Scalar conversion between GLSL base types (float/int/bool)."""
        src = elem(v.ty)
        if src == "half":
            v = self.coerce(v, "float")
            src = "float"
        dst_e = _BASE[dst]
        if src == dst_e:
            return v
        if dst_e == "float":
            if src == "i32":
                return self.emit("sitofp", "float", [v])
            return self.emit("select", "float", [v, Const("float", 1.0), Const("float", 0.0)])
        if dst_e == "i32":
            if src == "float":
                return self.emit("fptosi", "i32", [v])
            return self.emit("zext", "i32", [v])
        if src == "float":
            return self.emit("fcmp", "i1", [v, Const("float", 0.0)], "une")
        return self.emit("icmp", "i1", [v, Const("i32", 0)], "ne")

    def call(self, e: A.Call):
        name = e.name
        if name in T.VALUE_TYPES:
            return self.construct(e)
        if name == "texture2D":
            unit = self.samplers[e.args[0].name]
            coords = self.coerce(self.expr(e.args[1]), "<2 x float>")
            return self.emit("call", "<4 x float>", [_i32(unit), coords, Const("float", 0.0)], SAMPLER)
        if name in self.functions:
            return self.inline(self.functions[name], e.args)
        args = [self.expr(a) for a in e.args]
        args = self.unify(*args)
        if name == "mix":
            x, y, c = args
            if lanes(c.ty) != lanes(x.ty):
                c = self.splat(c, lanes(x.ty))
            return self.emit("call", x.ty, [x, y, c], MIX)
        if name in ("min", "max", "clamp"):
            x = args[0]
            rest = [self.splat(a, lanes(x.ty)) if lanes(a.ty) != lanes(x.ty) else a for a in args[1:]]
            if name == "clamp":
                lo = self.emit("call", x.ty, [x, rest[0]], "llvm.qgpu.fmax")
                return self.emit("call", x.ty, [lo, rest[1]], "llvm.qgpu.fmin")
            return self.emit("call", x.ty, [x, rest[0]], "llvm.qgpu.f" + name)
        if name == "dot":
            return self.dot(args[0], args[1])
        if name == "normalize":
            x = args[0]
            r = self.emit("call", elem(x.ty), [self.dot(x, x)], RSQ)
            if lanes(x.ty) > 1:
                r = self.splat(r, lanes(x.ty))
            return self.emit("fmul", x.ty, [x, r])
        intr = _UNARY_MATH.get(name)
        if intr is None:
            raise LoweringUnsupported(f"call to {name}")
        return self.emit("call", args[0].ty, [args[0]], intr)

    def dot(self, a, b):
        p = self.emit("fmul", a.ty, [a, b])
        if lanes(a.ty) == 1:
            return p
        acc = self.extract(p, 0)
        for k in range(1, lanes(a.ty)):
            acc = self.emit("fadd", elem(a.ty), [acc, self.extract(p, k)])
        return acc

    def construct(self, e: A.Call):
        target = e.name
        dst = T.base(target)
        n = T.size(target)
        comps = []
        for a in e.args:
            v = self.expr(a)
            if lanes(v.ty) == 1:
                comps.append(self.convert(v, dst))
            else:
                if n > 1 and len(e.args) == 1 and lanes(v.ty) == n and elem(v.ty) == _BASE[dst]:
                    return v
                for k in range(lanes(v.ty)):
                    if len(comps) >= n:
                        break
                    comps.append(self.convert(self.extract(v, k), dst))
            if len(comps) >= n:
                break
        if n == 1:
            return comps[0]
        if len(comps) == 1:
            return self.splat(comps[0], n)
        return self.build(_BASE[dst], comps[:n])

    def inline(self, fn: A.FunctionDecl, arg_exprs) -> object:
        args = [self.expr(a) for a in arg_exprs]
        ret_ty = ir_type(fn.ret_type)
        ret_var = self.new_var(ret_ty)
        self.write_var(ret_var.key, self.cur, zero_const(ret_ty))
        ret_block = self.new_block("ret")
        saved_scopes, saved_loops = self.scopes, self.loops
        self.scopes = [saved_scopes[0], {}]
        self.loops = []
        for p, a in zip(fn.params, args):
            self.declare(p.name, ir_type(p.type), a)
        self.frames.append(_Frame(ret_var.key, ret_block))
        self.stmts(fn.body.stmts)
        if self.cur is not None:
            self.br(ret_block)
        self.frames.pop()
        self.scopes, self.loops = saved_scopes, saved_loops
        self.seal(ret_block)
        self.start(ret_block)
        return self.read_var(ret_var.key, ret_block)


def lower(shader: A.Shader, name: str = "shader") -> Module:
    """Lower a typechecked shader to a single-function SSA module."""
    return Lowerer(shader, name).run()
