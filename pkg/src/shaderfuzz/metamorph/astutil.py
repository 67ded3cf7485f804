"""AST plumbing for the transforms: stable ids, cloning, replacement, scopes, jumps."""

from __future__ import annotations

import copy
import dataclasses
from typing import Iterator, Optional

from ..shader_lang import ast as A

STEP_ID_BASE = 1_000_000


class IdAlloc:
    """Node ids for nodes created by one transform step: ``uid * 10**6 + k``."""

    def __init__(self, uid: int):
        self.base = uid * STEP_ID_BASE
        self.k = 0

    def __call__(self) -> int:
        self.k += 1
        return self.base + self.k


def mk(cls, *args, alloc: IdAlloc, **kw):
    return cls(*args, nid=alloc(), **kw)


def clone(node: A.Node, alloc: IdAlloc) -> A.Node:
    """Deep copy with fresh ids for every node in the copy."""
    out = copy.deepcopy(node)
    for n in A.walk(out):
        n.nid = alloc()
    return out


def index(root: A.Node) -> dict:
    return {n.nid: n for n in A.walk(root)}


def _child_slots(node: A.Node):
    """Yield ``(container, key)`` pairs addressing each direct child node."""
    for f in dataclasses.fields(node):
        if f.name in ("nid", "pos", "ty", "diagnostics"):
            continue
        v = getattr(node, f.name)
        if isinstance(v, A.Node):
            yield node, f.name
        elif isinstance(v, list):
            for k, x in enumerate(v):
                if isinstance(x, A.Node):
                    yield v, k


def parent_map(root: A.Node) -> dict:
    """nid -> (container, key) where container is a node (attribute) or a list (index)."""
    out = {}
    stack = [root]
    while stack:
        n = stack.pop()
        for cont, key in _child_slots(n):
            child = getattr(cont, key) if isinstance(key, str) else cont[key]
            out[child.nid] = (cont, key)
            stack.append(child)
    return out


def replace(parents: dict, old: A.Node, new: A.Node) -> None:
    cont, key = parents[old.nid]
    if isinstance(key, str):
        setattr(cont, key, new)
    else:
        cont[key] = new


def identifiers(root: A.Node) -> set:
    names = set()
    for n in A.walk(root):
        if isinstance(n, (A.Var,)):
            names.add(n.name)
        elif isinstance(n, (A.VarDecl, A.Param, A.GlobalDecl, A.FunctionDecl)):
            names.add(n.name)
        elif isinstance(n, (A.Assign, A.IncDec)):
            names.add(n.target)
    return names


class FreshNames:
    def __init__(self, taken: set):
        self.taken = set(taken)

    def __call__(self, prefix: str) -> str:
        k = 0
        while f"{prefix}{k}" in self.taken:
            k += 1
        name = f"{prefix}{k}"
        self.taken.add(name)
        return name


# --- jumps -----------------------------------------------------------------------------------

_LOOPS = (A.For, A.While, A.DoWhile)


def escaping_jumps(node: A.Node) -> set:
    """Kinds of jump ('break', 'continue', 'return') that can leave ``node``."""
    out = set()

    def visit(n, in_loop, in_switch):
        if isinstance(n, A.Break):
            if not (in_loop or in_switch):
                out.add("break")
            return
        if isinstance(n, A.Continue):
            if not in_loop:
                out.add("continue")
            return
        if isinstance(n, A.Return):
            out.add("return")
            return
        if isinstance(n, A.Expr):
            return
        loop = in_loop or isinstance(n, _LOOPS)
        sw = in_switch or isinstance(n, A.Switch)
        for c in A.children(n):
            visit(c, loop, sw)

    visit(node, False, False)
    return out


# --- scopes ----------------------------------------------------------------------------------


def scope_at(shader: A.Shader, nid: int) -> Optional[dict]:
    """Variables visible at node ``nid`` as name -> type (samplers excluded), or None."""
    result = {}
    found = False

    def visit(n, scopes):
        nonlocal result, found
        if found:
            return
        if n.nid == nid:
            merged = {}
            for s in scopes:
                merged.update(s)
            result = merged
            found = True
            return
        if isinstance(n, A.Block):
            scopes.append({})
            for s in n.stmts:
                visit(s, scopes)
                if found:
                    return
                if isinstance(s, A.VarDecl):
                    scopes[-1][s.name] = s.type
            scopes.pop()
        elif isinstance(n, A.For):
            scopes.append({})
            if n.init is not None:
                visit(n.init, scopes)
                if isinstance(n.init, A.VarDecl):
                    scopes[-1][n.init.name] = n.init.type
            for c in (n.cond, n.step, n.body):
                if c is not None and not found:
                    visit(c, scopes)
            scopes.pop()
        elif isinstance(n, A.Switch):
            visit(n.selector, scopes)
            scopes.append({})
            for case in n.cases:
                for s in case.body:
                    if found:
                        return
                    visit(s, scopes)
                    if isinstance(s, A.VarDecl):
                        scopes[-1][s.name] = s.type
            scopes.pop()
        else:
            for c in A.children(n):
                visit(c, scopes)
                if found:
                    return

    globals_all = {g.name: g.type for g in shader.globals if g.type != "sampler2D" and g.qualifier != "out"}
    outs = {g.name: g.type for g in shader.globals if g.qualifier == "out"}
    for fn in shader.functions:
        base = dict(globals_all)
        if fn.name == "main":
            base.update(outs)
        base.update({p.name: p.type for p in fn.params})
        visit(fn.body, [base])
        if found:
            return result
    return None


def enclosing_function(shader: A.Shader, nid: int) -> Optional[A.FunctionDecl]:
    for fn in shader.functions:
        for n in A.walk(fn):
            if n.nid == nid:
                return fn
    return None


def walk_with_fn(shader: A.Shader) -> Iterator[tuple]:
    """Yield ``(function, node)`` for every node inside a function."""
    for fn in shader.functions:
        for n in A.walk(fn.body):
            yield fn, n
