"""SSA intermediate representation.

Operands are direct object references: an ``Inst`` (its result), a ``Const``,
an ``Undef`` or a ``GlobalRef`` naming a module slot. Control-flow targets
and phi predecessors are block labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

# --- types --------------------------------------------------------------------

SCALARS = ("i1", "i32", "half", "float")


def parse_vec(ty: str) -> tuple[str, int]:
    """``'<4 x float>'`` -> ``('float', 4)``; scalars have one lane."""
    if ty.startswith("<"):
        n, _, elem = ty[1:-1].partition(" x ")
        return elem, int(n)
    return ty, 1


_VEC_CACHE: dict[str, tuple[str, int]] = {}


def elem(ty: str) -> str:
    r = _VEC_CACHE.get(ty)
    if r is None:
        r = _VEC_CACHE[ty] = parse_vec(ty)
    return r[0]


def lanes(ty: str) -> int:
    r = _VEC_CACHE.get(ty)
    if r is None:
        r = _VEC_CACHE[ty] = parse_vec(ty)
    return r[1]


def vec(elem_ty: str, n: int) -> str:
    return elem_ty if n == 1 else f"<{n} x {elem_ty}>"


def with_elem(ty: str, new_elem: str) -> str:
    return vec(new_elem, lanes(ty))


def is_float(ty: str) -> bool:
    return elem(ty) in ("float", "half")


def is_half(ty: str) -> bool:
    return elem(ty) == "half"


def is_int(ty: str) -> bool:
    return elem(ty) == "i32"


def is_bool(ty: str) -> bool:
    return elem(ty) == "i1"


# --- values ---------------------------------------------------------------------

class Const:
    __slots__ = ("ty", "value")

    def __init__(self, ty: str, value):
        self.ty = ty
        self.value = value  # scalar, or tuple of lane values for vectors

    def key(self):
        from ..fp32 import bits
        v = self.value if isinstance(self.value, tuple) else (self.value,)
        if is_float(self.ty):
            v = tuple(bits(x) if x == x else 0x7FC00000 for x in v)
        return (self.ty, v)

    def __repr__(self):
        return f"Const({self.ty}, {self.value!r})"


class Undef:
    __slots__ = ("ty",)

    def __init__(self, ty: str):
        self.ty = ty

    def __repr__(self):
        return f"Undef({self.ty})"


class GlobalRef:
    __slots__ = ("name",)
    ty = "ptr"

    def __init__(self, name: str):
        self.name = name

    def __repr__(self):
        return f"@{self.name}"


TERMINATORS = frozenset({"br", "condbr", "switch", "ret"})


class Inst:
    """One instruction. ``id`` is None for void results (stores, terminators).

    attrs by opcode: icmp/fcmp -> predicate; call -> callee; load -> slot name;
    phi -> list of incoming labels; br -> label; condbr -> (true, false);
    switch -> (default, [(value, label), ...]).
    """

    __slots__ = ("id", "op", "ty", "args", "attrs")

    def __init__(self, id: Optional[int], op: str, ty: str, args: list, attrs=None):
        self.id = id
        self.op = op
        self.ty = ty
        self.args = args
        self.attrs = attrs

    @property
    def is_terminator(self) -> bool:
        return self.op in TERMINATORS

    def successors(self) -> list[str]:
        if self.op == "br":
            return [self.attrs]
        if self.op == "condbr":
            return list(self.attrs)
        if self.op == "switch":
            default, cases = self.attrs
            return [default] + [lbl for _, lbl in cases]
        return []

    def retarget(self, old: str, new: str) -> None:
        if self.op == "br":
            if self.attrs == old:
                self.attrs = new
        elif self.op == "condbr":
            t, f = self.attrs
            self.attrs = (new if t == old else t, new if f == old else f)
        elif self.op == "switch":
            d, cases = self.attrs
            self.attrs = (new if d == old else d, [(v, new if l == old else l) for v, l in cases])

    def __repr__(self):
        return f"Inst(%{self.id} = {self.op} {self.ty})"


@dataclass
class Block:
    label: str
    insts: list = field(default_factory=list)

    @property
    def terminator(self) -> Optional[Inst]:
        if self.insts and self.insts[-1].op in TERMINATORS:
            return self.insts[-1]
        return None

    def phis(self) -> list:
        out = []
        for i in self.insts:
            if i.op != "phi":
                break
            out.append(i)
        return out


@dataclass
class Function:
    name: str
    blocks: list = field(default_factory=list)

    def block_map(self) -> dict:
        return {b.label: b for b in self.blocks}

    def insts(self) -> Iterator[Inst]:
        for b in self.blocks:
            yield from b.insts

    def preds(self) -> dict:
        p: dict[str, list[str]] = {b.label: [] for b in self.blocks}
        for b in self.blocks:
            t = b.terminator
            if t is not None:
                for s in t.successors():
                    if s in p:
                        p[s].append(b.label)
        return p


@dataclass
class GlobalSlot:
    name: str
    ty: str
    role: str  # Input | Output | Uniform


ENTRY_NAME = "llvm_main"


@dataclass
class Module:
    name: str
    globals: list = field(default_factory=list)
    functions: list = field(default_factory=list)
    entry: str = ENTRY_NAME

    @property
    def main(self) -> Function:
        for f in self.functions:
            if f.name == self.entry:
                return f
        raise KeyError(self.entry)

    def slot(self, name: str) -> Optional[GlobalSlot]:
        for g in self.globals:
            if g.name == name:
                return g
        return None

    def slots(self, role: str) -> list:
        return [g for g in self.globals if g.role == role]

    def next_id(self) -> int:
        m = -1
        for f in self.functions:
            for i in f.insts():
                if i.id is not None and i.id > m:
                    m = i.id
        return m + 1


# --- intrinsics ---------------------------------------------------------------------

FGET = "llvm.qgpu.fget"
FSET = "llvm.qgpu.fset"
SAMPLER = "llvm.qgpu.fsampler"
RSQ = "llvm.qgpu.rsqf"
MIX = "llvm.qgpu.mix"

# lane-wise math intrinsics: name -> arity
MATH_INTRINSICS = {
    RSQ: 1,
    "llvm.qgpu.fsqrt": 1,
    "llvm.qgpu.fabs": 1,
    "llvm.qgpu.fsin": 1,
    "llvm.qgpu.fcos": 1,
    "llvm.qgpu.ffloor": 1,
    "llvm.qgpu.fmin": 2,
    "llvm.qgpu.fmax": 2,
    MIX: 3,
}
INTRINSICS = frozenset(MATH_INTRINSICS) | {FGET, FSET, SAMPLER}


def has_side_effects(inst: Inst) -> bool:
    if inst.op in TERMINATORS:
        return True
    if inst.op == "call" and inst.attrs == FSET:
        return True
    if inst.op == "sdiv":
        # may trap: only a constant non-zero divisor is provably safe
        d = inst.args[1]
        if not isinstance(d, Const):
            return True
        v = d.value if isinstance(d.value, tuple) else (d.value,)
        return any(x == 0 for x in v)
    return False


def operands(inst: Inst) -> list:
    return inst.args


def replace_uses(fn: Function, old, new) -> None:
    for inst in fn.insts():
        args = inst.args
        for k, a in enumerate(args):
            if a is old:
                args[k] = new


def use_counts(fn: Function) -> dict:
    counts: dict[int, int] = {}
    for inst in fn.insts():
        for a in inst.args:
            if type(a) is Inst:
                counts[id(a)] = counts.get(id(a), 0) + 1
    return counts


def zero_const(ty: str) -> Const:
    e, n = elem(ty), lanes(ty)
    z = {"i1": False, "i32": 0, "half": 0.0, "float": 0.0}[e]
    return Const(ty, z if n == 1 else (z,) * n)


def clone_module(m: Module) -> Module:
    """Deep copy preserving ids and labels."""
    out = Module(m.name, [GlobalSlot(g.name, g.ty, g.role) for g in m.globals], [], m.entry)
    for f in m.functions:
        mapping: dict[int, Inst] = {}
        nf = Function(f.name)
        for b in f.blocks:
            nb = Block(b.label)
            for i in b.insts:
                attrs = i.attrs
                if isinstance(attrs, list):
                    attrs = list(attrs)
                ni = Inst(i.id, i.op, i.ty, list(i.args), attrs)
                mapping[id(i)] = ni
                nb.insts.append(ni)
            nf.blocks.append(nb)
        for ni in nf.insts():
            args = ni.args
            for k, a in enumerate(args):
                if type(a) is Inst:
                    args[k] = mapping[id(a)]
        out.functions.append(nf)
    return out
