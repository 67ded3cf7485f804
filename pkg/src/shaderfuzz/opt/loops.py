"""Loop unrolling and loop splitting over canonical counted loops.

A canonical loop has a header with exactly two predecessors (a preheader
outside the loop and a single latch inside), ends the header with a
conditional branch whose false or true edge is the loop's only exit, and
has a trip count that can be computed by simulating the header condition
over constant-initialised induction phis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .. import fp32 as F
from ..ir.core import Block, Const, Function, Inst, Module, clone_module
from ..ir.semantics import IrTrap, evaluate, is_foldable
from ..ir.verify import dominates, dominators
from .bugs import BugId
from .passes import apply_replacements

MAX_UNROLL_TRIP = 8
MAX_SPLIT_TRIP = 16
MAX_UNROLLED_SIZE = 800  # instructions produced by one full unroll
_SIM_LIMIT = 64


@dataclass
class Loop:
    header: Block
    latch: Block
    preheader: Block
    blocks: list  # in function order
    exit_label: str
    body_label: str  # in-loop successor of the header

    @property
    def labels(self) -> set:
        return {b.label for b in self.blocks}

    def size(self) -> int:
        return sum(len(b.insts) for b in self.blocks)


def find_loops(fn: Function) -> list:
    """Canonical loops, innermost first."""
    preds = fn.preds()
    idom = dominators(fn, preds)
    bm = fn.block_map()
    loops = []
    for h in fn.blocks:
        if h.label not in idom:
            continue
        back = [p for p in preds[h.label] if p in idom and dominates(idom, h.label, p)]
        if len(back) != 1:
            continue
        outside = [p for p in preds[h.label] if p not in back]
        if len(outside) != 1 or len(preds[h.label]) != 2:
            continue
        body = {h.label}
        stack = [back[0]]
        while stack:
            x = stack.pop()
            if x not in body:
                body.add(x)
                stack.extend(preds[x])
        t = h.terminator
        if t.op != "condbr":
            continue
        inside = [s for s in t.attrs if s in body]
        outs = [s for s in t.attrs if s not in body]
        if len(inside) != 1 or len(outs) != 1:
            continue
        ok = True
        for lbl in body:
            if lbl == h.label:
                continue
            if any(s not in body for s in bm[lbl].terminator.successors()):
                ok = False  # a second exit (break or return)
                break
        if not ok or outside[0] in body:
            continue
        blocks = [b for b in fn.blocks if b.label in body]
        loops.append(Loop(h, bm[back[0]], bm[outside[0]], blocks, outs[0], inside[0]))
    loops.sort(key=lambda l: len(l.blocks))
    return loops


class _NotConstant(Exception):
    pass


def _incoming(phi: Inst, label: str):
    for a, l in zip(phi.args, phi.attrs):
        if l == label:
            return a
    raise KeyError(label)


def trip_count(loop: Loop, limit: int = _SIM_LIMIT) -> Optional[int]:
    """Number of body executions, or None when not statically known (or above ``limit``)."""
    h = loop.header
    labels = loop.labels
    phis = h.phis()
    phi_ids = {id(p) for p in phis}
    cond = h.terminator.args[0]
    state: dict[int, object] = {}
    for p in phis:
        init = _incoming(p, loop.preheader.label)
        if type(init) is Const:
            state[id(p)] = init.value

    def value(v, memo):
        if type(v) is Const:
            return v.value
        if type(v) is not Inst:
            raise _NotConstant()
        k = id(v)
        if k in memo:
            return memo[k]
        if k in phi_ids:
            if k not in state:
                raise _NotConstant()
            r = state[k]
        else:
            if v.op == "phi" or not is_foldable(v.op, v.attrs):
                raise _NotConstant()
            r = evaluate(v.op, v.ty, v.attrs, [value(a, memo) for a in v.args], v.args[0].ty)
        memo[k] = r
        return r

    in_loop_true = h.terminator.attrs[0] in labels
    latch_vals = {id(p): _incoming(p, loop.latch.label) for p in phis}
    n = 0
    try:
        while True:
            memo: dict = {}
            c = value(cond, memo)
            if bool(c) != in_loop_true:
                return n
            n += 1
            if n > limit:
                return None
            nxt = {}
            for k in state:
                try:
                    nxt[k] = value(latch_vals[k], memo)
                except _NotConstant:
                    pass  # phis the condition does not need may stay symbolic
            state = nxt
    except (_NotConstant, IrTrap, KeyError, TypeError):
        return None


class _Cloner:
    def __init__(self, fn: Function, next_id: int):
        self.next_id = next_id
        self.labels = {b.label for b in fn.blocks}

    def fresh_label(self, base: str) -> str:
        k = 0
        while f"{base}.{k}" in self.labels:
            k += 1
        lbl = f"{base}.{k}"
        self.labels.add(lbl)
        return lbl

    def clone_inst(self, inst: Inst) -> Inst:
        attrs = inst.attrs
        if isinstance(attrs, list):
            attrs = list(attrs)
        new_id = None
        if inst.id is not None:
            new_id = self.next_id
            self.next_id += 1
        return Inst(new_id, inst.op, inst.ty, list(inst.args), attrs)

    def clone_blocks(self, blocks, label_map: dict, vm: dict, skip_phis_of: Optional[Block] = None):
        """Clone ``blocks`` renaming labels via ``label_map``; fills ``vm``; returns new blocks."""
        out = []
        for b in blocks:
            nb = Block(label_map[b.label])
            for inst in b.insts:
                if b is skip_phis_of and inst.op == "phi":
                    continue
                ni = self.clone_inst(inst)
                vm[id(inst)] = ni
                if ni.op == "phi":
                    ni.attrs = [label_map.get(l, l) for l in ni.attrs]
                elif ni.is_terminator:
                    for old, new in label_map.items():
                        ni.retarget(old, new)
                nb.insts.append(ni)
            out.append(nb)
        return out


def _remap(blocks, vm: dict) -> None:
    for b in blocks:
        for inst in b.insts:
            args = inst.args
            for k, a in enumerate(args):
                if type(a) is Inst:
                    r = vm.get(id(a))
                    if r is not None:
                        args[k] = r


def _retarget_term(block: Block, old: str, new: str) -> None:
    block.terminator.retarget(old, new)


def _rename_phi_pred(block: Block, old: str, new: str) -> None:
    for phi in block.phis():
        phi.attrs = [new if l == old else l for l in phi.attrs]


def _outside_uses(fn: Function, loop: Loop, vm: dict) -> None:
    labels = loop.labels
    outside = [b for b in fn.blocks if b.label not in labels]
    _remap(outside, vm)


def unroll(fn: Function, loop: Loop, n: int, cloner: _Cloner) -> None:
    h = loop.header
    phis = h.phis()
    new_blocks = []
    headers = []  # header clone per iteration, plus the final one
    prev_vm: Optional[dict] = None
    iteration_entries = []
    for k in range(n + 1):
        label_map = {b.label: cloner.fresh_label(f"{b.label}.u") for b in loop.blocks}
        vm: dict = {}
        for p in phis:
            if prev_vm is None:
                vm[id(p)] = _incoming(p, loop.preheader.label)
            else:
                lv = _incoming(p, loop.latch.label)
                vm[id(p)] = prev_vm.get(id(lv), lv) if type(lv) is Inst else lv
        if k < n:
            blocks = cloner.clone_blocks(loop.blocks, label_map, vm, skip_phis_of=h)
        else:
            blocks = cloner.clone_blocks([h], label_map, vm, skip_phis_of=h)
        _remap(blocks, vm)
        hdr = blocks[[b.label for b in (loop.blocks if k < n else [h])].index(h.label)]
        term = hdr.insts[-1]
        target = label_map[loop.body_label] if k < n else loop.exit_label
        hdr.insts[-1] = Inst(None, "br", "void", [], target)
        headers.append(hdr)
        iteration_entries.append((blocks, label_map))
        new_blocks.extend(blocks)
        prev_vm = vm
    # latch of iteration k jumps to the header clone of iteration k+1
    for k in range(n):
        blocks, label_map = iteration_entries[k]
        latch_clone = next(b for b in blocks if b.label == label_map[loop.latch.label])
        latch_clone.terminator.retarget(label_map[h.label], headers[k + 1].label)
    final_vm = prev_vm
    _splice(fn, loop, new_blocks, headers[0].label, headers[-1].label, final_vm)


def _splice(fn: Function, loop: Loop, new_blocks, entry_label: str, exit_from: str, vm: dict) -> None:
    h = loop.header
    labels = loop.labels
    bm = fn.block_map()
    _retarget_term(loop.preheader, h.label, entry_label)
    _rename_phi_pred(bm[loop.exit_label], h.label, exit_from)
    # values defined in the header are the only loop values visible outside
    header_vm = {k: v for k, v in vm.items()}
    _outside_uses(fn, loop, header_vm)
    idx = fn.blocks.index(h)
    rest = [b for b in fn.blocks if b.label not in labels]
    before = [b for b in fn.blocks[:idx] if b.label not in labels]
    after = [b for b in rest if b not in before]
    fn.blocks = before + new_blocks + after


def split(fn: Function, loop: Loop, n: int, cloner: _Cloner) -> bool:
    """Split an n-trip loop into two loops of n//2 and n - n//2 trips."""
    h = loop.header
    lat = loop.latch.label
    ind = None
    for p in h.phis():
        init = _incoming(p, loop.preheader.label)
        nxt = _incoming(p, lat)
        if (p.ty == "i32" and type(init) is Const and type(nxt) is Inst and nxt.op == "add"
                and nxt.args[0] is p and type(nxt.args[1]) is Const and nxt.args[1].value != 0):
            ind = (p, init.value, nxt.args[1].value)
            break
    if ind is None:
        return False
    phi, init, step = ind
    half = n // 2
    stop = F.wrap32(init + half * step)
    if any(F.wrap32(init + k * step) == stop for k in range(half)):
        return False
    # second loop: a copy of the original, entered from the first loop's exit
    label_map = {b.label: cloner.fresh_label(f"{b.label}.s") for b in loop.blocks}
    vm: dict = {}
    second = cloner.clone_blocks(loop.blocks, label_map, vm)
    _remap(second, vm)
    h2 = second[[b.label for b in loop.blocks].index(h.label)]
    for p2, p in zip(h2.phis(), h.phis()):
        p2.attrs = [h.label if l == loop.preheader.label else l for l in p2.attrs]
        p2.args = [p if l == h.label else a for a, l in zip(p2.args, p2.attrs)]
    # first loop: stop when the induction reaches the split point
    term = h.terminator
    cond = term.args[0]
    ne = Inst(cloner.next_id, "icmp", "i1", [phi, Const("i32", stop)], "ne")
    cloner.next_id += 1
    in_true = term.attrs[0] in loop.labels
    if in_true:
        c2 = Inst(cloner.next_id, "and", "i1", [cond, ne])
    else:
        # exit on true: keep looping only while cond is false and ne holds
        eq = Inst(cloner.next_id, "xor", "i1", [ne, Const("i1", True)])
        cloner.next_id += 1
        h.insts.insert(len(h.insts) - 1, ne)
        h.insts.insert(len(h.insts) - 1, eq)
        c2 = Inst(cloner.next_id, "or", "i1", [cond, eq])
        ne = None
    cloner.next_id += 1
    if ne is not None:
        h.insts.insert(len(h.insts) - 1, ne)
    h.insts.insert(len(h.insts) - 1, c2)
    term.args = [c2]
    exit_label = loop.exit_label
    term.retarget(exit_label, h2.label)
    bm = fn.block_map()
    _rename_phi_pred(bm[exit_label], h.label, h2.label)
    labels = loop.labels
    outside = [b for b in fn.blocks if b.label not in labels]
    header_vm = {id(i): vm[id(i)] for i in h.insts if id(i) in vm}
    _remap(outside, header_vm)
    idx = fn.blocks.index(loop.blocks[-1]) + 1
    fn.blocks[idx:idx] = second
    return True


def loop_unroll_inplace(m: Module, bugs=frozenset()) -> bool:
    fn = m.main
    cloner = _Cloner(fn, m.next_id())
    for loop in find_loops(fn):
        n = trip_count(loop, MAX_UNROLL_TRIP)
        if n is None:
            continue
        if n == 1 and BugId.UnrollNonterminating in bugs:
            return True  # claims progress without touching the loop
        if loop.size() * (n + 1) > MAX_UNROLLED_SIZE:
            continue
        unroll(fn, loop, n, cloner)
        return True
    return False


def loop_split_inplace(m: Module, bugs=frozenset()) -> bool:
    fn = m.main
    cloner = _Cloner(fn, m.next_id())
    for loop in find_loops(fn):
        n = trip_count(loop, MAX_SPLIT_TRIP)
        if n is None or n <= MAX_UNROLL_TRIP:
            continue
        if loop.size() * (n + 2) > 2 * MAX_UNROLLED_SIZE:
            continue
        if split(fn, loop, n, cloner):
            return True
    return False


def loop_unroll(m: Module, bugs=()) -> tuple[Module, bool]:
    out = clone_module(m)
    return (out, True) if loop_unroll_inplace(out, frozenset(bugs)) else (m, False)


def loop_split(m: Module, bugs=()) -> tuple[Module, bool]:
    out = clone_module(m)
    return (out, True) if loop_split_inplace(out, frozenset(bugs)) else (m, False)
