"""The eight rewrites.

Every kind provides ``sites(shader, ctx)`` (applicable target node ids),
``choose(shader, node, rng, ctx)`` (draws the kind-specific parameters) and
``apply(shader, node, params, ctx, alloc)`` which rewrites the tree in place
and is deterministic given the parameters, so replay needs no generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..shader_lang import ast as A
from ..shader_lang import types as T
from .astutil import (FreshNames, IdAlloc, clone, escaping_jumps, identifiers, index, parent_map,
                      replace, scope_at)
from .recipe import NoDonatableRegion, NotApplicable, TransformKind as K

MIX_LITERALS = (0.0, 0.5, 1.0, 2.0, -1.0)
DONOR_FLOATS = (0.25, 0.5, 1.5, 2.0)
DONOR_INTS = (1, 2, 3, 4)
MAX_SOURCE_UNROLL = 8
MAX_REGION_LEN = 3


# --- shared shapes ---------------------------------------------------------------------------


def _main(shader: A.Shader) -> A.FunctionDecl:
    return shader.entry


def _literal(ty: str, value, alloc: IdAlloc) -> A.Expr:
    b, n = T.base(ty), T.size(ty)
    lit = {"float": A.FloatLit, "int": A.IntLit, "bool": A.BoolLit}[b]
    scalar = lit({"float": float, "int": int, "bool": bool}[b](value), nid=alloc())
    if n == 1:
        return scalar
    return A.Call(ty, [scalar], nid=alloc())


def _assigns_or_declares(node: A.Node, name: str) -> bool:
    for n in A.walk(node):
        if isinstance(n, (A.Assign, A.IncDec)) and n.target == name:
            return True
        if isinstance(n, A.VarDecl) and n.name == name:
            return True
    return False


@dataclass
class Canonical:
    """``for (int i = c0; i < c1 | i <= c1; i++ | i += s)`` with an invariant induction."""

    var: str
    start: int
    stride: int
    trips: int


def canonical_for(s: A.Node) -> Optional[Canonical]:
    if not isinstance(s, A.For):
        return None
    init, cond, step = s.init, s.cond, s.step
    if not (isinstance(init, A.VarDecl) and init.type == "int" and isinstance(init.init, A.IntLit)):
        return None
    i = init.name
    if not (isinstance(cond, A.Binary) and cond.op in ("<", "<=") and isinstance(cond.left, A.Var)
            and cond.left.name == i and isinstance(cond.right, A.IntLit)):
        return None
    if isinstance(step, A.IncDec) and step.target == i and step.op == "++":
        stride = 1
    elif (isinstance(step, A.Assign) and step.target == i and step.op == "+="
          and isinstance(step.value, A.IntLit) and step.value.value > 0):
        stride = step.value.value
    else:
        return None
    if escaping_jumps(s.body) & {"break", "continue"} or _assigns_or_declares(s.body, i):
        return None
    c0, c1 = init.init.value, cond.right.value
    span = c1 - c0 + (1 if cond.op == "<=" else 0)
    trips = max(0, -(-span // stride))
    return Canonical(i, c0, stride, trips)


def _substitute(node: A.Node, name: str, make) -> A.Node:
    """Replace every read of ``name`` under ``node`` by ``make()``."""
    parents = parent_map(node)
    for n in list(A.walk(node)):
        if isinstance(n, A.Var) and n.name == name:
            replace(parents, n, make())
    return node


def _for(var: str, start: int, limit_op: str, limit: int, stride: int, body: A.Block, alloc) -> A.For:
    init = A.VarDecl(None, "int", var, A.IntLit(start, nid=alloc()), nid=alloc())
    cond = A.Binary(limit_op, A.Var(var, nid=alloc()), A.IntLit(limit, nid=alloc()), nid=alloc())
    if stride == 1:
        step = A.IncDec(var, "++", nid=alloc())
    else:
        step = A.Assign(var, "+=", A.IntLit(stride, nid=alloc()), nid=alloc())
    return A.For(init, cond, step, body, nid=alloc())


def _statement_sites(shader: A.Shader):
    """(statement, container list) for statements held directly in a block or case body."""
    for fn in shader.functions:
        for n in A.walk(fn.body):
            if isinstance(n, A.Block):
                for s in n.stmts:
                    yield s
            elif isinstance(n, A.Case):
                for s in n.body:
                    yield s


# --- MixWrap ---------------------------------------------------------------------------------


class MixWrap:
    kind = K.MixWrap

    @staticmethod
    def sites(shader, ctx):
        return [n.nid for n in A.walk(shader) if isinstance(n, A.Expr) and n.ty in T.FLOAT_TYPES]

    @staticmethod
    def choose(shader, node, rng, ctx):
        scope = scope_at(shader, node.nid) or {}
        names = sorted(k for k, t in scope.items() if t == node.ty)
        options = [{"lit": v} for v in MIX_LITERALS] + [{"var": v} for v in names]
        return {"u": rng.choice(options)}

    @staticmethod
    def apply(shader, node, params, ctx, alloc):
        if not isinstance(node, A.Expr) or node.ty not in T.FLOAT_TYPES:
            raise NotApplicable(f"MixWrap needs a float or vector expression, got {node.ty}")
        u = params["u"]
        if "var" in u:
            scope = scope_at(shader, node.nid) or {}
            if scope.get(u["var"]) != node.ty:
                raise NotApplicable(f"{u['var']!r} is not a visible {node.ty}")
            unused = A.Var(u["var"], nid=alloc())
        else:
            unused = _literal(node.ty, u["lit"], alloc)
        parents = parent_map(shader)
        wrapped = A.Call("mix", [node, unused, A.FloatLit(1.0, nid=alloc())], nid=alloc())
        replace(parents, node, wrapped)


# --- IfToSwitch ------------------------------------------------------------------------------


class IfToSwitch:
    kind = K.IfToSwitch

    @staticmethod
    def _ok(n):
        if not isinstance(n, A.If):
            return False
        arms = [n.then] + ([n.els] if n.els is not None else [])
        # a break inside the arms would be captured by the new switch
        return not any("break" in escaping_jumps(a) for a in arms)

    @classmethod
    def sites(cls, shader, ctx):
        return [n.nid for n in A.walk(shader) if cls._ok(n)]

    @staticmethod
    def choose(shader, node, rng, ctx):
        return {}

    @classmethod
    def apply(cls, shader, node, params, ctx, alloc):
        if not cls._ok(node):
            raise NotApplicable("IfToSwitch needs an if without escaping break")
        sel = A.Call("int", [node.cond], nid=alloc())
        then = A.Case(1, [node.then, A.Break(nid=alloc())], nid=alloc())
        if node.els is None:
            other = A.Case(None, [A.Break(nid=alloc())], nid=alloc())
        else:
            els = node.els if isinstance(node.els, A.Block) else A.Block([node.els], nid=alloc())
            other = A.Case(None, [els, A.Break(nid=alloc())], nid=alloc())
        new = A.Switch(sel, [then, other], nid=alloc())
        parents = parent_map(shader)
        cont, key = parents[node.nid]
        if isinstance(cont, A.If) and key == "els":
            new = A.Block([new], nid=alloc())  # an else-if arm must stay a block or an if
        replace(parents, node, new)


# --- ForToWhile / WhileToFor -----------------------------------------------------------------


class ForToWhile:
    kind = K.ForToWhile

    @staticmethod
    def _ok(n):
        return (isinstance(n, A.For) and isinstance(n.init, A.VarDecl) and n.cond is not None
                and n.step is not None and "continue" not in escaping_jumps(n.body))

    @classmethod
    def sites(cls, shader, ctx):
        return [n.nid for n in A.walk(shader) if cls._ok(n)]

    @staticmethod
    def choose(shader, node, rng, ctx):
        return {}

    @classmethod
    def apply(cls, shader, node, params, ctx, alloc):
        if not cls._ok(node):
            raise NotApplicable("ForToWhile needs a for with a local induction and no continue")
        body = A.Block([node.body, node.step], nid=alloc())
        loop = A.While(node.cond, body, nid=alloc())
        replace(parent_map(shader), node, A.Block([node.init, loop], nid=alloc()))


class WhileToFor:
    kind = K.WhileToFor

    @staticmethod
    def sites(shader, ctx):
        return [n.nid for n in A.walk(shader) if isinstance(n, A.While)]

    @staticmethod
    def choose(shader, node, rng, ctx):
        return {}

    @staticmethod
    def apply(shader, node, params, ctx, alloc):
        if not isinstance(node, A.While):
            raise NotApplicable("WhileToFor needs a while loop")
        replace(parent_map(shader), node, A.For(None, node.cond, None, node.body, nid=alloc()))


# --- SingleIterationLoopWrap -----------------------------------------------------------------


class SingleIterationLoopWrap:
    kind = K.SingleIterationLoopWrap

    @staticmethod
    def _ok(s):
        # declarations would change scope; escaping jumps would be captured
        return (isinstance(s, A.Stmt) and not isinstance(s, (A.VarDecl, A.Break, A.Continue))
                and not escaping_jumps(s) & {"break", "continue"})

    @classmethod
    def sites(cls, shader, ctx):
        return [s.nid for s in _statement_sites(shader) if cls._ok(s)]

    @staticmethod
    def choose(shader, node, rng, ctx):
        return {}

    @classmethod
    def apply(cls, shader, node, params, ctx, alloc):
        if not cls._ok(node) or node.nid not in {s.nid for s in _statement_sites(shader)}:
            raise NotApplicable("SingleIterationLoopWrap needs a non-declaration statement")
        k = FreshNames(identifiers(shader))("k")
        loop = _for(k, 0, "<", 1, 1, A.Block([node], nid=alloc()), alloc)
        replace(parent_map(shader), node, loop)


# --- LoopUnroll / LoopSplit ------------------------------------------------------------------


class LoopUnroll:
    kind = K.LoopUnroll

    @staticmethod
    def _shape(n):
        c = canonical_for(n)
        return c if c is not None and 1 <= c.trips <= MAX_SOURCE_UNROLL else None

    @classmethod
    def sites(cls, shader, ctx):
        return [n.nid for n in A.walk(shader) if cls._shape(n) is not None]

    @classmethod
    def choose(cls, shader, node, rng, ctx):
        c = cls._shape(node)
        # factor == trips is a full unroll
        return {"factor": c.trips if c.trips < 2 else 2 + rng.below(c.trips - 1)}

    @classmethod
    def apply(cls, shader, node, params, ctx, alloc):
        c = cls._shape(node)
        f = int(params["factor"])
        if c is None or not 1 <= f <= c.trips:
            raise NotApplicable("LoopUnroll needs a canonical loop with at most 8 iterations")
        i, s = c.var, c.stride
        if f == c.trips:
            copies = []
            for j in range(c.trips):
                value = c.start + j * s
                copies.append(_substitute(clone(node.body, alloc), i, lambda v=value: A.IntLit(v, nid=alloc())))
            replace(parent_map(shader), node, A.Block(copies, nid=alloc()))
            return
        m, r = divmod(c.trips, f)
        split = c.start + m * f * s
        copies = []
        for k in range(f):
            if k == 0:
                copies.append(clone(node.body, alloc))
            else:
                def offset(k=k):
                    return A.Binary("+", A.Var(i, nid=alloc()), A.IntLit(k * s, nid=alloc()), nid=alloc())
                copies.append(_substitute(clone(node.body, alloc), i, offset))
        main = _for(i, c.start, "<", split, f * s, A.Block(copies, nid=alloc()), alloc)
        parts = [main]
        if r:
            rest = A.For(A.VarDecl(None, "int", i, A.IntLit(split, nid=alloc()), nid=alloc()),
                         clone(node.cond, alloc), clone(node.step, alloc), node.body, nid=alloc())
            parts.append(rest)
        replace(parent_map(shader), node, A.Block(parts, nid=alloc()))


class LoopSplit:
    kind = K.LoopSplit

    @staticmethod
    def _shape(n):
        c = canonical_for(n)
        return c if c is not None and c.trips >= 2 else None

    @classmethod
    def sites(cls, shader, ctx):
        return [n.nid for n in A.walk(shader) if cls._shape(n) is not None]

    @classmethod
    def choose(cls, shader, node, rng, ctx):
        c = cls._shape(node)
        return {"at": 1 + rng.below(c.trips - 1)}

    @classmethod
    def apply(cls, shader, node, params, ctx, alloc):
        c = cls._shape(node)
        at = int(params["at"])
        if c is None or not 1 <= at < c.trips:
            raise NotApplicable("LoopSplit needs a canonical loop with at least 2 iterations")
        mid = c.start + at * c.stride
        first = _for(c.var, c.start, "<", mid, c.stride, clone(node.body, alloc), alloc)
        second = A.For(A.VarDecl(None, "int", c.var, A.IntLit(mid, nid=alloc()), nid=alloc()),
                       node.cond, node.step, node.body, nid=alloc())
        replace(parent_map(shader), node, A.Block([first, second], nid=alloc()))


# --- CodeDonation ----------------------------------------------------------------------------


@dataclass
class Region:
    block: int  # donor block nid
    start: int
    length: int
    free: dict  # name -> type of variables read or written but not declared in the region
    declared: dict  # name -> type of top-level declarations
    results: list  # float-typed names visible at the region end

    def key(self) -> list:
        return [self.block, self.start, self.length]


def _region_ok(stmts, donor_fns) -> bool:
    for s in stmts:
        jumps = escaping_jumps(s)
        if jumps:
            return False
        for n in A.walk(s):
            if isinstance(n, A.Call) and (n.name == "texture2D" or n.name in donor_fns):
                return False
    return True


def find_regions(donor: A.Shader) -> list:
    """Extractable contiguous statement runs in the donor's main, in a fixed order."""
    donor_fns = {f.name for f in donor.functions if f.name != "main"}
    main = _main(donor)
    out = []
    for blk in A.walk(main.body):
        if not isinstance(blk, A.Block):
            continue
        for start in range(len(blk.stmts)):
            for length in range(1, MAX_REGION_LEN + 1):
                stmts = blk.stmts[start:start + length]
                if len(stmts) < length or not _region_ok(stmts, donor_fns):
                    continue
                r = _analyse_region(donor, stmts)
                if r is not None:
                    out.append(Region(blk.nid, start, length, *r))
    return out


def _analyse_region(donor, stmts):
    visible = scope_at(donor, stmts[0].nid) or {}
    decls = [n for s in stmts for n in A.walk(s) if isinstance(n, A.VarDecl)]
    names = [d.name for d in decls]
    if len(set(names)) != len(names) or any(nm in visible for nm in names):
        return None  # shadowing inside the region would defeat the flat rename map
    declared_all = set(names)
    used = set()
    for s in stmts:
        for n in A.walk(s):
            if isinstance(n, A.Var):
                used.add(n.name)
            elif isinstance(n, (A.Assign, A.IncDec)):
                used.add(n.target)
    free = {}
    for nm in sorted(used - declared_all):
        t = visible.get(nm)
        if t is None or not T.is_value(t):
            return None
        free[nm] = t
    top = {s.name: s.type for s in stmts if isinstance(s, A.VarDecl)}
    results = sorted(nm for nm, t in {**free, **top}.items() if t in T.FLOAT_TYPES)
    if not results:
        return None
    return free, top, results


class CodeDonation:
    kind = K.CodeDonation

    @staticmethod
    def sites(shader, ctx):
        if not ctx.donors_with_regions():
            return []
        return [n.nid for n in A.walk(_main(shader).body) if isinstance(n, A.Block)]

    @staticmethod
    def choose(shader, node, rng, ctx):
        donors = ctx.donors_with_regions()
        if not donors:
            raise NoDonatableRegion("no donor in the corpus has an extractable region")
        name = rng.choice(donors)
        region = rng.choice(ctx.regions(name))
        bindings = {}
        for nm, t in sorted(region.free.items()):
            b = T.base(t)
            pool = DONOR_FLOATS if b == "float" else DONOR_INTS if b == "int" else (False, True)
            bindings[nm] = rng.choice(pool)
        return {
            "donor": name,
            "region": region.key(),
            "bindings": bindings,
            "result": rng.choice(region.results),
            "at": rng.below(len(node.stmts) + 1),
        }

    @staticmethod
    def apply(shader, node, params, ctx, alloc):
        donor_name = params["donor"]
        donor = ctx.donor(donor_name)
        if donor is None:
            raise NotApplicable(f"unknown donor {donor_name!r}")
        region = ctx.region(donor_name, params["region"])
        if region is None:
            raise NoDonatableRegion(f"{donor_name}: region {params['region']} is not extractable")
        if not isinstance(node, A.Block) or node.nid not in {n.nid for n in A.walk(_main(shader).body)}:
            raise NotApplicable("CodeDonation targets a block of main")
        fresh = FreshNames(identifiers(shader))
        rename = {nm: fresh("d") for nm in sorted(set(region.free) | _region_decls(donor, region))}
        donor_block = index(_main(donor).body)[region.block]
        body = []
        for nm, t in sorted(region.free.items()):
            body.append(A.VarDecl(None, t, rename[nm], _literal(t, params["bindings"][nm], alloc), nid=alloc()))
        for s in donor_block.stmts[region.start:region.start + region.length]:
            body.append(_rename(clone(s, alloc), rename))
        result = params["result"]
        rty = {**region.free, **region.declared}[result]
        out_name = fresh("donated_out")
        body.append(A.Assign(out_name, "=", A.Var(rename[result], nid=alloc()), nid=alloc()))
        at = min(int(params["at"]), len(node.stmts))
        node.stmts.insert(at, A.Block(body, nid=alloc()))
        shader.globals.append(A.GlobalDecl("out", None, rty, out_name, nid=alloc()))


def _region_decls(donor, region) -> set:
    blk = index(_main(donor).body)[region.block]
    return {n.name for s in blk.stmts[region.start:region.start + region.length]
            for n in A.walk(s) if isinstance(n, A.VarDecl)}


def _rename(node: A.Node, rename: dict) -> A.Node:
    for n in A.walk(node):
        if isinstance(n, A.Var) and n.name in rename:
            n.name = rename[n.name]
        elif isinstance(n, A.VarDecl) and n.name in rename:
            n.name = rename[n.name]
        elif isinstance(n, (A.Assign, A.IncDec)) and n.target in rename:
            n.target = rename[n.target]
    return node


@dataclass
class DonorContext:
    """Typechecked donor shaders and their cached regions."""

    corpus: dict  # name -> typechecked Shader
    _regions: dict = field(default_factory=dict)

    def donor(self, name: str) -> Optional[A.Shader]:
        return self.corpus.get(name)

    def regions(self, name: str) -> list:
        if name not in self._regions:
            d = self.corpus.get(name)
            self._regions[name] = find_regions(d) if d is not None else []
        return self._regions[name]

    def region(self, name: str, key) -> Optional[Region]:
        for r in self.regions(name):
            if r.key() == list(key):
                return r
        return None

    def donors_with_regions(self) -> list:
        return [n for n in sorted(self.corpus) if self.regions(n)]


TRANSFORMS = {t.kind: t for t in (MixWrap, IfToSwitch, ForToWhile, WhileToFor, SingleIterationLoopWrap,
                                  LoopUnroll, LoopSplit, CodeDonation)}
