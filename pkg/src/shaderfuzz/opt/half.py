"""Half-precision promotion.

Every f16 value is retyped to f32. ``fptrunc`` becomes a plain alias of its
operand and ``fpext`` turns into an identity ``bitcast``, so the promoted
module computes exactly what a pure-f32 lowering would.
"""

from __future__ import annotations

from ..ir.core import Const, GlobalRef, Inst, Module, Undef, clone_module, elem, with_elem
from .passes import ReplMap, apply_replacements


def _promote_ty(ty: str) -> str:
    return with_elem(ty, "float") if elem(ty) == "half" else ty


def has_half(m: Module) -> bool:
    for fn in m.functions:
        for inst in fn.insts():
            if elem(inst.ty) == "half":
                return True
            for a in inst.args:
                if type(a) is not GlobalRef and elem(a.ty) == "half":
                    return True
    return False


def half_promote_inplace(m: Module, bugs=frozenset()) -> bool:
    if not has_half(m):
        return False
    for fn in m.functions:
        repl = ReplMap()
        for b in fn.blocks:
            keep = []
            for inst in b.insts:
                inst.ty = _promote_ty(inst.ty)
                args = inst.args
                for k, a in enumerate(args):
                    t = type(a)
                    if t is Const and elem(a.ty) == "half":
                        args[k] = Const(_promote_ty(a.ty), a.value)
                    elif t is Undef and elem(a.ty) == "half":
                        args[k] = Undef(_promote_ty(a.ty))
                if inst.op == "fptrunc":
                    repl.put(inst, inst.args[0])
                    continue
                if inst.op == "fpext":
                    inst.op = "bitcast"
                keep.append(inst)
            b.insts = keep
        apply_replacements(fn, repl)
    return True


def half_promote(m: Module, bugs=()) -> tuple[Module, bool]:
    """Pure form: returns ``(module, changed)``; modules without f16 come back untouched."""
    if not has_half(m):
        return m, False
    out = clone_module(m)
    half_promote_inplace(out)
    return out, True
