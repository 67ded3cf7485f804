"""Scalar and control-flow passes.

Every ``*_inplace`` function mutates its module and returns whether anything
changed; the pipeline works on a private copy. The public wrappers clone first,
which gives the pure ``IrModule -> (IrModule, changed)`` interface.
"""

from __future__ import annotations

from typing import Callable, Iterable

from .. import fp32 as F
from ..ir.core import (FSET, MIX, Const, Function, Inst, Module, Undef, clone_module,
                       has_side_effects, is_float, lanes, zero_const)
from ..ir.semantics import IrTrap, evaluate, is_foldable
from ..ir.verify import reachable_order
from .bugs import BugId, InternalFault

# --- shared helpers -----------------------------------------------------------------


class ReplMap(dict):
    """id(inst) -> replacement; holds the replaced instructions so their ids stay unique."""

    def __init__(self):
        super().__init__()
        self.alive = []

    def put(self, inst: Inst, value) -> None:
        self[id(inst)] = value
        self.alive.append(inst)


def resolve(repl: dict, v):
    while type(v) is Inst:
        nxt = repl.get(id(v))
        if nxt is None:
            break
        v = nxt
    return v


def apply_replacements(fn: Function, repl: dict) -> None:
    if not repl:
        return
    for inst in fn.insts():
        args = inst.args
        for k, a in enumerate(args):
            if type(a) is Inst and id(a) in repl:
                args[k] = resolve(repl, a)


def fix_phis(fn: Function) -> None:
    """Realign every phi's incoming list with the block's current predecessor multiset."""
    preds = fn.preds()
    for b in fn.blocks:
        phis = b.phis()
        if not phis:
            continue
        want = preds[b.label]
        for phi in phis:
            if list(phi.attrs) == want:
                continue
            table = {}
            for a, lbl in zip(phi.args, phi.attrs):
                table.setdefault(lbl, a)
            phi.args = [table[l] if l in table else Undef(phi.ty) for l in want]
            phi.attrs = list(want)


def remove_unreachable(fn: Function) -> bool:
    live = set(reachable_order(fn))
    if len(live) == len(fn.blocks):
        return False
    fn.blocks = [b for b in fn.blocks if b.label in live]
    fix_phis(fn)
    return True


def _lanes_of(c: Const):
    return c.value if isinstance(c.value, tuple) else (c.value,)


def is_const_all(v, x) -> bool:
    """True for a constant whose every lane equals ``x`` (bitwise for floats)."""
    if type(v) is not Const:
        return False
    if is_float(v.ty):
        want = F.bits(x)
        return all(F.bits(l) == want for l in _lanes_of(v))
    return all(l == x and type(l) is type(x) for l in _lanes_of(v))


def same_value(a, b) -> bool:
    if a is b:
        return True
    if type(a) is Const and type(b) is Const:
        return a.key() == b.key()
    return False


def trivial_phi_value(phi: Inst):
    """The unique incoming value of a phi (ignoring self references), else None."""
    same = None
    for a in phi.args:
        if a is phi:
            continue
        if same is None:
            same = a
        elif not same_value(same, a):
            return None
    return same


def _rewrite_insts(fn: Function, rule: Callable) -> bool:
    """Apply ``rule(inst) -> replacement | None`` over the function in block order."""
    repl = ReplMap()
    changed = False
    for b in fn.blocks:
        keep = []
        for inst in b.insts:
            if repl:
                args = inst.args
                for k, a in enumerate(args):
                    if type(a) is Inst and id(a) in repl:
                        args[k] = resolve(repl, a)
            r = rule(inst)
            if r is None:
                keep.append(inst)
            elif r is inst:
                keep.append(inst)
                changed = True  # rewritten in place
            else:
                repl.put(inst, r)
                changed = True
        b.insts = keep
    apply_replacements(fn, repl)
    return changed


# --- ConstFold --------------------------------------------------------------------------


def _fold(inst: Inst):
    op = inst.op
    if op == "phi":
        v = trivial_phi_value(inst)
        return v if v is not None and type(v) is Const else None
    if not is_foldable(op, inst.attrs):
        return None
    args = inst.args
    for a in args:
        if type(a) is not Const:
            return None
    if op == "sdiv" and any(x == 0 for x in _lanes_of(args[1])):
        return None  # keeps the runtime trap
    try:
        v = evaluate(op, inst.ty, inst.attrs, [a.value for a in args], args[0].ty)
    except IrTrap:
        return None
    return Const(inst.ty, v)


def const_fold_inplace(m: Module, bugs=frozenset()) -> bool:
    return _rewrite_insts(m.main, _fold)


# --- Dce ------------------------------------------------------------------------------------


def _drop_switch_case_stores(fn: Function) -> bool:
    """Injected fault: stores in case blocks of a switch over zext(i1) lose their value."""
    targets = set()
    for b in fn.blocks:
        t = b.terminator
        if t is not None and t.op == "switch":
            sel = t.args[0]
            if type(sel) is Inst and sel.op == "zext":
                targets.update(lbl for _, lbl in t.attrs[1])
    changed = False
    for b in fn.blocks:
        if b.label not in targets:
            continue
        for inst in b.insts:
            if inst.op == "call" and inst.attrs == FSET and type(inst.args[2]) is Inst:
                inst.args[2] = Undef(inst.args[2].ty)
                changed = True
    return changed


def dce_inplace(m: Module, bugs=frozenset()) -> bool:
    fn = m.main
    changed = False
    if BugId.DceDropsLiveStore in bugs:
        changed = _drop_switch_case_stores(fn)
    live = set()
    work = []
    for inst in fn.insts():
        if has_side_effects(inst):
            live.add(id(inst))
            work.append(inst)
    while work:
        inst = work.pop()
        for a in inst.args:
            if type(a) is Inst and id(a) not in live:
                live.add(id(a))
                work.append(a)
    for b in fn.blocks:
        n = len(b.insts)
        b.insts = [i for i in b.insts if id(i) in live]
        changed |= len(b.insts) != n
    return changed


# --- InstCombine --------------------------------------------------------------------------

_GUARD_OPS = ("fadd", "fsub", "fmul", "fdiv")


def _combine(inst: Inst, bugs) -> object:
    op, args = inst.op, inst.args
    if op == "fmul" or (op == "call" and inst.attrs == MIX):
        if op == "fmul":
            pairs = ((args[0], args[1]), (args[1], args[0]))
            hit = next((x for x, c in pairs if is_const_all(c, 1.0)), None)
        else:
            hit = args[0] if is_const_all(args[2], 1.0) else None
            if hit is None and is_const_all(args[2], 0.0):
                return args[1]
        if hit is not None:
            if (BugId.InstCombineWrongIdentity in bugs and type(hit) is Inst
                    and hit.op in _GUARD_OPS and type(hit.args[1]) is Inst):
                return zero_const(inst.ty)
            return hit
        return None
    if op == "fdiv" and is_const_all(args[1], 1.0):
        return args[0]
    if op == "fadd":
        if is_const_all(args[1], -0.0):
            return args[0]
        if is_const_all(args[0], -0.0):
            return args[1]
        return None
    if op == "fsub" and is_const_all(args[1], 0.0):
        return args[0]
    if op in ("add", "sub") and is_const_all(args[1], 0):
        return args[0]
    if op == "add" and is_const_all(args[0], 0):
        return args[1]
    if op in ("mul", "sdiv") and is_const_all(args[1], 1):
        return args[0]
    if op == "mul" and is_const_all(args[0], 1):
        return args[1]
    if op == "and" and is_const_all(args[1], True):
        return args[0]
    if op == "and" and is_const_all(args[0], True):
        return args[1]
    if op in ("or", "xor") and is_const_all(args[1], False):
        return args[0]
    if op in ("or", "xor") and is_const_all(args[0], False):
        return args[1]
    if op == "xor" and is_const_all(args[1], True):
        x = args[0]
        if type(x) is Inst and x.op == "xor" and is_const_all(x.args[1], True):
            return x.args[0]
        return None
    if op == "fneg":
        x = args[0]
        if type(x) is Inst and x.op == "fneg":
            return x.args[0]
        return None
    if op == "select":
        c, a, b = args
        if type(c) is Const:
            return a if c.value else b
        if same_value(a, b):
            return a
        return None
    if op == "bitcast" and args[0].ty == inst.ty:
        return args[0]
    if op == "extractelement":
        v, k = args
        while type(v) is Inst and v.op == "insertelement":
            if v.args[2].value == k.value:
                return v.args[1]
            v = v.args[0]
        if v is not args[0]:
            if type(v) is Const:
                return Const(inst.ty, v.value[k.value])
            inst.args = [v, k]
            return inst
        return None
    return None


def inst_combine_inplace(m: Module, bugs=frozenset()) -> bool:
    return _rewrite_insts(m.main, lambda i: _combine(i, bugs))


# --- Peephole --------------------------------------------------------------------------------


def peephole_inplace(m: Module, bugs=frozenset()) -> bool:
    fn = m.main
    cfg_changed = False
    for b in fn.blocks:
        t = b.terminator
        if t is None or t.op != "switch":
            continue
        sel = t.args[0]
        if not (type(sel) is Inst and sel.op == "zext"):
            continue
        if BugId.PeepholeNullDeref in bugs:
            raise InternalFault("Peephole", "null dereference while folding switch over zext(i1)")
        default, cases = t.attrs
        if any(v not in (0, 1) for v, _ in cases):
            continue
        table = dict(cases)
        t1, t0 = table.get(1, default), table.get(0, default)
        if t1 == t0:
            b.insts[-1] = Inst(None, "br", "void", [], t1)
        else:
            b.insts[-1] = Inst(None, "condbr", "void", [sel.args[0]], (t1, t0))
        cfg_changed = True
    if cfg_changed:
        fix_phis(fn)

    def rule(inst):
        op, args = inst.op, inst.args
        if op == "select" and inst.ty == "i1":
            c, a, b = args
            if is_const_all(a, True) and is_const_all(b, False):
                return c
            if is_const_all(a, False) and is_const_all(b, True):
                inst.op, inst.args = "xor", [c, Const("i1", True)]
                return inst
        if op == "icmp" and inst.ty == "i1":
            x, c = args
            if type(x) is Inst and x.op == "zext" and x.ty == "i32":
                if (inst.attrs == "ne" and is_const_all(c, 0)) or (inst.attrs == "eq" and is_const_all(c, 1)):
                    return x.args[0]
        return None

    return _rewrite_insts(fn, rule) or cfg_changed


# --- CfgSimplify -----------------------------------------------------------------------------


def _const_terminators(fn: Function) -> bool:
    changed = False
    for b in fn.blocks:
        t = b.terminator
        if t.op == "condbr":
            c = t.args[0]
            target = None
            if type(c) is Const:
                target = t.attrs[0] if c.value else t.attrs[1]
            elif t.attrs[0] == t.attrs[1]:
                target = t.attrs[0]
            if target is not None:
                b.insts[-1] = Inst(None, "br", "void", [], target)
                changed = True
        elif t.op == "switch":
            sel = t.args[0]
            default, cases = t.attrs
            target = None
            if type(sel) is Const:
                target = dict(cases).get(sel.value, default)
            elif all(lbl == default for _, lbl in cases):
                target = default
            if target is not None:
                b.insts[-1] = Inst(None, "br", "void", [], target)
                changed = True
    if changed:
        fix_phis(fn)
    return changed


def _trivial_phis(fn: Function) -> bool:
    def rule(inst):
        if inst.op != "phi":
            return None
        return trivial_phi_value(inst)
    return _rewrite_insts(fn, rule)


def _merge_blocks(fn: Function) -> bool:
    changed = False
    while True:
        preds = fn.preds()
        bm = fn.block_map()
        merged = False
        for a in fn.blocks:
            t = a.terminator
            if t.op != "br":
                continue
            b = bm[t.attrs]
            if b is a or b is fn.blocks[0] or preds[b.label] != [a.label]:
                continue
            repl = ReplMap()
            for phi in b.phis():
                repl.put(phi, phi.args[0])
            body = [i for i in b.insts if i.op != "phi"]
            a.insts = a.insts[:-1] + body
            fn.blocks.remove(b)
            apply_replacements(fn, repl)
            for s in body[-1].successors():
                for phi in bm[s].phis():
                    phi.attrs = [a.label if l == b.label else l for l in phi.attrs]
            merged = changed = True
            break
        if not merged:
            return changed


def _forward_blocks(fn: Function) -> bool:
    changed = False
    bm = fn.block_map()
    entry = fn.blocks[0]
    for f in list(fn.blocks):
        if f is entry or len(f.insts) != 1 or f.insts[0].op != "br":
            continue
        target = f.insts[0].attrs
        if target == f.label or bm[target].phis():
            continue
        for p in fn.blocks:
            t = p.terminator
            if p is not f and f.label in t.successors():
                t.retarget(f.label, target)
                changed = True
    if changed:
        remove_unreachable(fn)
    return changed


def cfg_simplify_inplace(m: Module, bugs=frozenset()) -> bool:
    fn = m.main
    changed = _const_terminators(fn)
    changed |= remove_unreachable(fn)
    changed |= _trivial_phis(fn)
    changed |= _merge_blocks(fn)
    changed |= _forward_blocks(fn)
    return changed


# --- pure wrappers ------------------------------------------------------------------------------


def _pure(inplace):
    def run(m: Module, bugs: Iterable = ()) -> tuple[Module, bool]:
        out = clone_module(m)
        changed = inplace(out, frozenset(bugs))
        return (out, True) if changed else (m, False)
    run.__name__ = inplace.__name__.replace("_inplace", "")
    run.__doc__ = f"Pure form of ``{inplace.__name__}``: returns ``(module, changed)``."
    return run


const_fold = _pure(const_fold_inplace)
dce = _pure(dce_inplace)
inst_combine = _pure(inst_combine_inplace)
peephole = _pure(peephole_inplace)
cfg_simplify = _pure(cfg_simplify_inplace)
