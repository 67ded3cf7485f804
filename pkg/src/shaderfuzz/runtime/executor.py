"""Deterministic CPU execution of IR modules.

Each instruction is translated once into a closure over pre-resolved operand
accessors; the dispatch loop then only walks blocks. Values are Python floats
(binary32-exact), ints and bools, with tuples for vectors.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .. import fp32 as F
from ..ir.core import FGET, FSET, SAMPLER, Const, GlobalRef, Inst, Module, Undef, elem, lanes
from ..ir.semantics import BINARY, CASTS, FCMP, ICMP, MATH, IrTrap
from .env import ExecEnv, ExecResult, canonical_hash, sample, seed_lanes, uniform_lanes


class HalfPrecisionError(ValueError):
    """Raised for modules that still compute in f16; run HalfPromote first."""


class _UndefInt(int):
    """i32 undef: carries the sentinel value but is recognisable at branches."""


class _UndefBool:
    def __bool__(self):
        raise IrTrap("UndefBranch")

    def __eq__(self, other):
        raise IrTrap("UndefBranch")

    __hash__ = object.__hash__


UNDEF_I32 = _UndefInt(F.UNDEF_BITS)
UNDEF_I1 = _UndefBool()


def undef_value(ty: str):
    e, n = elem(ty), lanes(ty)
    v = {"i1": UNDEF_I1, "i32": UNDEF_I32}.get(e, F.UNDEF_F32)
    return v if n == 1 else (v,) * n


class _Budget(Exception):
    pass


def _lanewise1(f, vector: bool):
    return (lambda a: tuple(map(f, a))) if vector else f


def _lanewise2(f, vector: bool):
    return (lambda a, b: tuple(map(f, a, b))) if vector else f


def _insert(v, x, k):
    v = list(v)
    v[k] = x
    return tuple(v)


def _select(c, a, b):
    if c.__class__ is _UndefBool:
        raise IrTrap("UndefBranch")
    return a if c else b


def seed_inputs(module: Module, env: ExecEnv) -> dict:
    """Lane values of every Input slot; the ordinal is the slot's position among inputs."""
    out = {}
    for k, g in enumerate(module.slots("Input")):
        out[g.name] = seed_lanes(env.input_seed, k, lanes(g.ty))
    return out


def _uniforms(module: Module, env: ExecEnv) -> dict:
    out = {}
    ordinal = 0
    for g in module.slots("Uniform"):
        if g.ty == "sampler":
            continue
        out[g.name] = uniform_lanes(env, g.name, ordinal, lanes(g.ty))
        ordinal += 1
    return out


class _Machine:
    def __init__(self, module: Module, env: ExecEnv):
        self.module = module
        self.env = env
        self.inputs = seed_inputs(module, env)
        self.uniforms = _uniforms(module, env)
        self.outputs = {g.name: [0.0] * lanes(g.ty) for g in module.slots("Output")}
        self.written: set[str] = set()

    # -- operand access
    @staticmethod
    def spec(a):
        if type(a) is Inst:
            return (True, a.id)
        if type(a) is Const:
            return (False, a.value)
        if type(a) is Undef:
            return (False, undef_value(a.ty))
        if type(a) is GlobalRef:
            return (False, a.name)
        raise TypeError(a)

    # -- intrinsics with environment access
    def fget(self, slot, off):
        return self._read(self.inputs, slot, off, self._fget_lanes)

    def _read(self, table, slot, off, n):
        src = table.get(slot)
        if src is None or off < 0 or off + n > len(src):
            raise IrTrap("MalformedIntrinsic")
        return src[off] if n == 1 else tuple(src[off:off + n])

    def fset(self, slot, off, val):
        dst = self.outputs.get(slot)
        vals = val if isinstance(val, tuple) else (val,)
        if dst is None or off < 0 or off + len(vals) > len(dst):
            raise IrTrap("MalformedIntrinsic")
        dst[off:off + len(vals)] = vals
        self.written.add(slot)

    def compile_inst(self, inst: Inst):
        op, ty = inst.op, inst.ty
        vector = lanes(ty) > 1
        if op in BINARY:
            return _lanewise2(BINARY[op], vector)
        if op == "fneg":
            return _lanewise1(F.fneg, vector)
        if op == "icmp" or op == "fcmp":
            f = (ICMP if op == "icmp" else FCMP)[inst.attrs]
            return _lanewise2(f, vector)
        if op == "select":
            return _select
        if op in CASTS:
            return _lanewise1(CASTS[op], vector)
        if op == "extractelement":
            return lambda v, k: v[k]
        if op == "insertelement":
            return _insert
        if op == "load":
            name = inst.attrs
            n = lanes(ty)
            uniforms = self.uniforms

            def load():
                v = uniforms[name]
                return v[0] if n == 1 else tuple(v)
            return load
        if op == "call":
            callee = inst.attrs
            if callee in MATH:
                f = MATH[callee]
                return (lambda *a: tuple(map(f, *a))) if vector else f
            if callee == FGET:
                n = lanes(ty)
                inputs = self.inputs
                return lambda slot, off: self._read(inputs, slot, off, n)
            if callee == FSET:
                return self.fset
            if callee == SAMPLER:
                env = self.env
                return lambda unit, coords, lod: sample(unit, coords, env)
        raise IrTrap(f"MalformedIntrinsic: {op} {inst.attrs or ''}".strip())

    def compile(self):
        fn = self.module.main
        compiled = {}
        for b in fn.blocks:
            phis, body, term = [], [], None
            for inst in b.insts:
                if inst.op == "phi":
                    phis.append((inst.id, {lbl: self.spec(a) for a, lbl in zip(inst.args, inst.attrs)}))
                elif inst.is_terminator:
                    if inst.op == "br":
                        term = ("br", inst.attrs)
                    elif inst.op == "condbr":
                        term = ("condbr", self.spec(inst.args[0]), inst.attrs)
                    elif inst.op == "switch":
                        d, cases = inst.attrs
                        term = ("switch", self.spec(inst.args[0]), d, dict(cases))
                    else:
                        term = ("ret",)
                else:
                    body.append((inst.id, self.compile_inst(inst), tuple(self.spec(a) for a in inst.args)))
            compiled[b.label] = (phis, body, term)
        return fn.blocks[0].label, compiled

    def run(self) -> int:
        entry, blocks = self.compile()
        budget = self.env.step_budget
        vals: dict[int, object] = {}
        steps = 0
        label, prev = entry, None
        while True:
            phis, body, term = blocks[label]
            if phis:
                steps += len(phis)
                if steps >= budget:
                    raise _Budget(budget)
                new = []
                for dest, incoming in phis:
                    r, x = incoming[prev]
                    new.append((dest, vals[x] if r else x))
                for dest, v in new:
                    vals[dest] = v
            for dest, f, spec in body:
                steps += 1
                if steps >= budget:
                    raise _Budget(budget)
                v = f(*[vals[x] if r else x for r, x in spec])
                if dest is not None:
                    vals[dest] = v
            steps += 1
            if steps >= budget:
                raise _Budget(budget)
            kind = term[0]
            prev = label
            if kind == "br":
                label = term[1]
            elif kind == "condbr":
                r, x = term[1]
                c = vals[x] if r else x
                if c.__class__ is _UndefBool:
                    raise IrTrap("UndefBranch")
                label = term[2][0] if c else term[2][1]
            elif kind == "switch":
                r, x = term[1]
                sel = vals[x] if r else x
                if sel.__class__ is _UndefInt:
                    raise IrTrap("UndefBranch")
                label = term[3].get(sel, term[2])
            else:
                return steps


def check_no_half(module: Module) -> None:
    for fn in module.functions:
        for inst in fn.insts():
            if elem(inst.ty) == "half" or any(
                    type(a) is not GlobalRef and elem(a.ty) == "half" for a in inst.args):
                raise HalfPrecisionError(f"f16 value at %{inst.id} ({inst.op}); run HalfPromote first")


def execute(module: Module, env: ExecEnv, observed: Optional[Sequence[str]] = None) -> ExecResult:
    """Run the entry function; ``observed`` limits which outputs enter the hash."""
    check_no_half(module)
    m = _Machine(module, env)
    try:
        steps = m.run()
    except IrTrap as t:
        return ExecResult("Trap", None, 0, reason=str(t).split(":")[0])
    except _Budget as b:
        return ExecResult("StepBudgetExceeded", None, b.args[0])
    except RecursionError:
        return ExecResult("Trap", None, 0, reason="MalformedIntrinsic")
    outputs = {name: tuple(v) for name, v in m.outputs.items()}
    diags = [f"output {o!r} not written; defaulted to 0.0" for o in outputs if o not in m.written]
    return ExecResult("Ok", canonical_hash(outputs, observed), steps, outputs, diagnostics=diags)
