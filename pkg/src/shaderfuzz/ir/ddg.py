"""Data-dependency graphs, backward output slices and slice comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import FSET, Const, GlobalRef, Inst, Module, Undef
from .text import inst_text


@dataclass
class Ddg:
    """Nodes are instruction keys: the value id, or ``"s<n>"`` for void instructions."""

    nodes: dict = field(default_factory=dict)  # key -> Inst
    edges: list = field(default_factory=list)  # (def key, use key), one per operand use
    keys: dict = field(default_factory=dict)  # id(inst) -> key

    def key(self, inst: Inst):
        return self.keys[id(inst)]

    def preds(self) -> dict:
        p = {k: [] for k in self.nodes}
        for a, b in self.edges:
            if a not in p[b]:
                p[b].append(a)
        return p


def build_ddg(m: Module) -> Ddg:
    d = Ddg()
    n_void = 0
    fn = m.main
    for inst in fn.insts():
        if inst.id is None:
            key = f"s{n_void}"
            n_void += 1
        else:
            key = inst.id
        d.nodes[key] = inst
        d.keys[id(inst)] = key
    for inst in fn.insts():
        for a in inst.args:
            if type(a) is Inst:
                d.edges.append((d.keys[id(a)], d.keys[id(inst)]))
    return d


@dataclass
class Slice:
    slot: str
    insts: list  # program order

    def __len__(self):
        return len(self.insts)


def slice_outputs(m: Module, d: Ddg) -> dict:
    """Backward closure from every fset of each output slot."""
    preds = d.preds()
    order = {k: n for n, k in enumerate(d.nodes)}
    out = {}
    for g in m.slots("Output"):
        roots = [k for k, i in d.nodes.items()
                 if i.op == "call" and i.attrs == FSET and type(i.args[0]) is GlobalRef and i.args[0].name == g.name]
        seen = set(roots)
        stack = list(roots)
        while stack:
            k = stack.pop()
            for p in preds[k]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        out[g.name] = Slice(g.name, [d.nodes[k] for k in sorted(seen, key=order.__getitem__)])
    return out


def _operand_sig(a):
    if type(a) is Inst:
        return ("v", a.ty)
    if type(a) is Const:
        return ("c",) + a.key()
    if type(a) is Undef:
        return ("undef", a.ty)
    return ("g", a.name)


def signature(inst: Inst) -> tuple:
    """Opcode, arity and constant operands; value operands match by type only."""
    attrs = inst.attrs if inst.op in ("icmp", "fcmp", "call", "load") else None
    return (inst.op, attrs, inst.ty, len(inst.args), tuple(_operand_sig(a) for a in inst.args))


def _describe(inst: Inst) -> str:
    return inst_text(inst)


@dataclass
class DivergenceSummary:
    slot: str
    unmatched_variant: list = field(default_factory=list)
    unmatched_reference: list = field(default_factory=list)
    undef_sites: list = field(default_factory=list)
    opcode_pairs: list = field(default_factory=list)  # (reference op, variant op)

    @property
    def empty(self) -> bool:
        return not (self.unmatched_variant or self.unmatched_reference or self.undef_sites)

    def to_json(self) -> dict:
        return {
            "slot": self.slot,
            "unmatched_variant": self.unmatched_variant,
            "unmatched_reference": self.unmatched_reference,
            "undef_sites": self.undef_sites,
            "opcode_pairs": [list(p) for p in self.opcode_pairs],
        }


def _op_name(inst: Inst) -> str:
    if inst.op == "call":
        return f"call {inst.attrs}"
    if inst.op in ("icmp", "fcmp"):
        return f"{inst.op} {inst.attrs}"
    return inst.op


def ddg_diff(variant: Slice, reference: Slice) -> DivergenceSummary:
    """Greedy bijection on instruction signatures; leftovers are reported."""
    if variant.slot != reference.slot:
        raise ValueError(f"slices target different slots: {variant.slot} vs {reference.slot}")
    pool: dict[tuple, list] = {}
    for inst in reference.insts:
        pool.setdefault(signature(inst), []).append(inst)
    s = DivergenceSummary(variant.slot)
    left_var = []
    for inst in variant.insts:
        cands = pool.get(signature(inst))
        if cands:
            cands.pop(0)
        else:
            left_var.append(inst)
        if any(type(a) is Undef for a in inst.args):
            s.undef_sites.append(_describe(inst))
    left_ref = [i for i in reference.insts if any(i is c for cs in pool.values() for c in cs)]
    s.unmatched_variant = [_describe(i) for i in left_var]
    s.unmatched_reference = [_describe(i) for i in left_ref]
    # parallel walk over the leftovers pairs up the rewritten opcodes
    for r, v in zip(left_ref, left_var):
        s.opcode_pairs.append((_op_name(r), _op_name(v)))
    return s
