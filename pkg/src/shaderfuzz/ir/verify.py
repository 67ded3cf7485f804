"""Structural and type checks over an IR module."""

from __future__ import annotations

from typing import Optional

from .core import (FGET, FSET, INTRINSICS, MATH_INTRINSICS, SAMPLER, TERMINATORS, Const,
                   GlobalRef, Inst, Module, Undef, elem, is_bool, is_float, is_int, lanes, vec)


class VerifyError(Exception):
    """First violated invariant. ``kind`` is a short name, ``inst`` the offending value id."""

    def __init__(self, kind: str, message: str, inst: Optional[int] = None):
        where = f" at %{inst}" if inst is not None else ""
        super().__init__(f"{kind}{where}: {message}")
        self.kind = kind
        self.inst = inst
        self.message = message


_INT_BIN = {"add", "sub", "mul", "sdiv"}
_FLOAT_BIN = {"fadd", "fsub", "fmul", "fdiv"}
_BOOL_BIN = {"and", "or", "xor"}
_ICMP = {"eq", "ne", "slt", "sle", "sgt", "sge"}
_FCMP = {"oeq", "une", "olt", "ole", "ogt", "oge"}
_KNOWN = (_INT_BIN | _FLOAT_BIN | _BOOL_BIN | TERMINATORS
          | {"fneg", "icmp", "fcmp", "select", "phi", "sitofp", "fptosi", "zext", "fpext",
             "fptrunc", "bitcast", "extractelement", "insertelement", "call", "load"})


def _fail(kind, msg, inst: Inst):
    raise VerifyError(kind, msg, inst.id)


def _ty(v) -> str:
    return v.ty


def _check_types(m: Module, inst: Inst) -> None:
    op, ty, args = inst.op, inst.ty, inst.args

    def arity(n):
        if len(args) != n:
            _fail("ArityMismatch", f"{op} takes {n} operands, got {len(args)}", inst)

    def same(*vals):
        for a in vals:
            if type(a) is GlobalRef or a.ty != ty:
                _fail("TypeMismatch", f"{op} operand of type {getattr(a, 'ty', '?')} in {ty} instruction", inst)

    def const_index(a, n):
        if not (type(a) is Const and a.ty == "i32" and 0 <= a.value < n):
            _fail("TypeMismatch", f"{op} needs a constant lane index below {n}", inst)

    if op in _INT_BIN or op in _FLOAT_BIN or op in _BOOL_BIN:
        arity(2)
        want = is_int if op in _INT_BIN else is_float if op in _FLOAT_BIN else is_bool
        if not want(ty):
            _fail("TypeMismatch", f"{op} cannot produce {ty}", inst)
        same(*args)
    elif op == "fneg":
        arity(1)
        if not is_float(ty):
            _fail("TypeMismatch", f"fneg on {ty}", inst)
        same(*args)
    elif op in ("icmp", "fcmp"):
        arity(2)
        preds = _ICMP if op == "icmp" else _FCMP
        if inst.attrs not in preds:
            _fail("TypeMismatch", f"bad predicate {inst.attrs!r} for {op}", inst)
        a, b = args
        if type(a) is GlobalRef or type(b) is GlobalRef or a.ty != b.ty:
            _fail("TypeMismatch", f"{op} operands differ in type", inst)
        ok = is_float(a.ty) if op == "fcmp" else (is_int(a.ty) or (is_bool(a.ty) and inst.attrs in ("eq", "ne")))
        if not ok or ty != vec("i1", lanes(a.ty)):
            _fail("TypeMismatch", f"{op} {inst.attrs} over {a.ty} -> {ty}", inst)
    elif op == "select":
        arity(3)
        if args[0].ty != "i1":
            _fail("TypeMismatch", "select condition must be i1", inst)
        same(args[1], args[2])
    elif op in ("sitofp", "fptosi", "zext", "fpext", "fptrunc", "bitcast"):
        arity(1)
        src = args[0].ty
        if lanes(src) != lanes(ty):
            _fail("TypeMismatch", f"{op} changes lane count", inst)
        pair = (elem(src), elem(ty))
        allowed = {
            "sitofp": {("i32", "float"), ("i32", "half")},
            "fptosi": {("float", "i32"), ("half", "i32")},
            "zext": {("i1", "i32")},
            "fpext": {("half", "float")},
            "fptrunc": {("float", "half")},
            "bitcast": {("float", "float"), ("half", "half"), ("i32", "i32"), ("i1", "i1")},
        }[op]
        if pair not in allowed:
            _fail("TypeMismatch", f"{op} from {src} to {ty}", inst)
    elif op == "extractelement":
        arity(2)
        v = args[0]
        if lanes(v.ty) < 2 or elem(v.ty) != ty:
            _fail("TypeMismatch", f"extractelement {v.ty} -> {ty}", inst)
        const_index(args[1], lanes(v.ty))
    elif op == "insertelement":
        arity(3)
        same(args[0])
        if lanes(ty) < 2 or args[1].ty != elem(ty):
            _fail("TypeMismatch", f"insertelement of {args[1].ty} into {ty}", inst)
        const_index(args[2], lanes(ty))
    elif op == "load":
        arity(0)
        g = m.slot(inst.attrs)
        if g is None or g.role != "Uniform":
            _fail("UnknownSlot", f"load from non-uniform slot @{inst.attrs}", inst)
        if g.ty != ty:
            _fail("TypeMismatch", f"load {ty} from slot of type {g.ty}", inst)
    elif op == "call":
        callee = inst.attrs
        if callee not in INTRINSICS:
            _fail("UnknownIntrinsic", f"@{callee}", inst)
        if callee in (FGET, FSET):
            arity(2 if callee == FGET else 3)
            ref = args[0]
            g = m.slot(ref.name) if type(ref) is GlobalRef else None
            role = "Input" if callee == FGET else "Output"
            if g is None or g.role != role:
                _fail("UnknownSlot", f"{callee} needs an {role} slot", inst)
            if args[1].ty != "i32":
                _fail("TypeMismatch", f"{callee} lane offset must be i32", inst)
            vt = ty if callee == FGET else args[2].ty
            if callee == FSET and ty != "void":
                _fail("TypeMismatch", "fset returns void", inst)
            if elem(vt) != elem(g.ty) or lanes(vt) > lanes(g.ty):
                _fail("TypeMismatch", f"{callee} of {vt} on slot {g.ty}", inst)
        elif callee == SAMPLER:
            arity(3)
            if (args[0].ty, args[1].ty, args[2].ty, ty) != ("i32", "<2 x float>", "float", "<4 x float>"):
                _fail("TypeMismatch", "sampler signature is (i32, <2 x float>, float) -> <4 x float>", inst)
        else:
            arity(MATH_INTRINSICS[callee])
            if not is_float(ty):
                _fail("TypeMismatch", f"{callee} on {ty}", inst)
            same(*args)
    elif op == "condbr":
        arity(1)
        if args[0].ty != "i1":
            _fail("TypeMismatch", "condbr condition must be i1", inst)
    elif op == "switch":
        arity(1)
        if args[0].ty != "i32":
            _fail("TypeMismatch", "switch selector must be i32", inst)
        vals = [v for v, _ in inst.attrs[1]]
        if len(set(vals)) != len(vals):
            _fail("TypeMismatch", "duplicate switch case", inst)
    elif op in ("br", "ret"):
        arity(0)


def dominators(fn, preds=None) -> dict:
    """Immediate-dominator free dominance sets, reachable blocks only."""
    order = reachable_order(fn)
    if preds is None:
        preds = fn.preds()
    index = {lbl: i for i, lbl in enumerate(order)}
    idom: dict[str, str] = {order[0]: order[0]} if order else {}

    def intersect(a, b):
        while a != b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for lbl in order[1:]:
            new = None
            for p in preds[lbl]:
                if p in idom:
                    new = p if new is None else intersect(p, new)
            if new is not None and idom.get(lbl) != new:
                idom[lbl] = new
                changed = True
    return idom


def reachable_order(fn) -> list[str]:
    """Reverse postorder of blocks reachable from the entry."""
    if not fn.blocks:
        return []
    bm = fn.block_map()
    seen = set()
    post: list[str] = []
    stack = [(fn.blocks[0].label, iter(_succ(bm, fn.blocks[0].label)))]
    seen.add(fn.blocks[0].label)
    while stack:
        lbl, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            post.append(lbl)
            stack.pop()
        elif nxt not in seen and nxt in bm:
            seen.add(nxt)
            stack.append((nxt, iter(_succ(bm, nxt))))
    return post[::-1]


def _succ(bm, lbl):
    t = bm[lbl].terminator
    return t.successors() if t is not None else []


def dominates(idom: dict, a: str, b: str) -> bool:
    while True:
        if a == b:
            return True
        parent = idom.get(b)
        if parent is None or parent == b:
            return False
        b = parent


def verify(m: Module) -> None:
    """Raise VerifyError on the first violated invariant; return None when valid."""
    names = set()
    for g in m.globals:
        if g.name in names:
            raise VerifyError("DuplicateSlot", f"@{g.name} declared twice")
        names.add(g.name)
        if g.role not in ("Input", "Output", "Uniform"):
            raise VerifyError("UnknownSlot", f"bad role {g.role!r} for @{g.name}")
    try:
        fn = m.main
    except KeyError:
        raise VerifyError("MissingEntry", f"no function @{m.entry}") from None
    if not fn.blocks:
        raise VerifyError("MissingTerminator", "function has no blocks")
    labels = set()
    for b in fn.blocks:
        if b.label in labels:
            raise VerifyError("DuplicateLabel", f"block {b.label} defined twice")
        labels.add(b.label)

    defined: dict[int, Inst] = {}
    where: dict[int, tuple[str, int]] = {}
    for b in fn.blocks:
        if not b.insts or b.insts[-1].op not in TERMINATORS:
            raise VerifyError("MissingTerminator", f"block {b.label} does not end in a terminator",
                              b.insts[-1].id if b.insts else None)
        seen_non_phi = False
        for k, inst in enumerate(b.insts):
            if inst.op not in _KNOWN:
                _fail("UnknownOpcode", inst.op, inst)
            if inst.op in TERMINATORS and k != len(b.insts) - 1:
                _fail("MissingTerminator", f"terminator {inst.op} in the middle of {b.label}", inst)
            if inst.op == "phi":
                if seen_non_phi:
                    _fail("PhiPlacement", "phi after non-phi instruction", inst)
            else:
                seen_non_phi = True
            void = inst.ty == "void"
            if void != (inst.id is None):
                _fail("SsaViolation", "void instructions define no value and vice versa", inst)
            if inst.id is not None:
                if inst.id in defined:
                    _fail("SsaViolation", f"value %{inst.id} defined more than once", inst)
                defined[inst.id] = inst
                where[inst.id] = (b.label, k)
            for s in inst.successors():
                if s not in labels:
                    _fail("BadBranchTarget", f"unknown label %{s}", inst)
            if b.label == fn.blocks[0].label and inst.op == "phi":
                _fail("PhiPlacement", "phi in entry block", inst)

    live = set(id(i) for i in defined.values())
    preds = fn.preds()
    for b in fn.blocks:
        for inst in b.insts:
            for a in inst.args:
                if type(a) is Inst and id(a) not in live:
                    _fail("UndefinedValue", f"operand refers to a value not in the function", inst)
                if type(a) is GlobalRef and inst.op != "call":
                    _fail("TypeMismatch", "global operand outside an I/O intrinsic", inst)
            if inst.op == "phi":
                if sorted(inst.attrs) != sorted(preds[b.label]):
                    _fail("PhiMismatch", f"incoming {sorted(inst.attrs)} vs predecessors {sorted(preds[b.label])}", inst)
                if len(inst.args) != len(inst.attrs):
                    _fail("ArityMismatch", "phi values and labels differ in count", inst)
                for a in inst.args:
                    if type(a) is GlobalRef or a.ty != inst.ty:
                        _fail("TypeMismatch", "phi incoming type", inst)
            else:
                _check_types(m, inst)

    idom = dominators(fn, preds)
    for b in fn.blocks:
        if b.label not in idom:
            continue  # unreachable code is exempt from dominance
        for k, inst in enumerate(b.insts):
            for j, a in enumerate(inst.args):
                if type(a) is not Inst:
                    continue
                dlbl, dk = where[a.id]
                if inst.op == "phi":
                    use_lbl = inst.attrs[j]
                    if use_lbl in idom and not dominates(idom, dlbl, use_lbl):
                        _fail("DominanceViolation", f"%{a.id} does not dominate edge from {use_lbl}", inst)
                elif dlbl == b.label:
                    if dk >= k:
                        _fail("DominanceViolation", f"%{a.id} used before definition", inst)
                elif not dominates(idom, dlbl, b.label):
                    _fail("DominanceViolation", f"%{a.id} does not dominate its use", inst)


def is_valid(m: Module) -> bool:
    try:
        verify(m)
    except VerifyError:
        return False
    return True
