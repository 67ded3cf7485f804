"""AST node classes for the shading language subset.

Nodes compare structurally: source positions, node ids and type annotations
are excluded from equality, so ``parse(pretty_print(ast)) == ast`` holds
for any well-formed tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(kw_only=True)
class Node:
    nid: int = field(default=0, compare=False, repr=False)
    pos: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)


@dataclass(kw_only=True)
class Expr(Node):
    ty: Optional[str] = field(default=None, compare=False, repr=False)


@dataclass
class FloatLit(Expr):
    value: float


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class Var(Expr):
    name: str


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Call(Expr):
    name: str
    args: list[Expr]


@dataclass
class Swizzle(Expr):
    base: Expr
    comps: str


@dataclass(kw_only=True)
class Stmt(Node):
    pass


@dataclass
class Block(Stmt):
    stmts: list[Stmt]


@dataclass
class VarDecl(Stmt):
    precision: Optional[str]
    type: str
    name: str
    init: Optional[Expr]


@dataclass
class Assign(Stmt):
    target: str
    op: str
    value: Expr


@dataclass
class IncDec(Stmt):
    target: str
    op: str


@dataclass
class If(Stmt):
    cond: Expr
    then: Block
    els: Optional[Union[Block, "If"]]


@dataclass
class Case(Node):
    label: Optional[int]
    body: list[Stmt]


@dataclass
class Switch(Stmt):
    selector: Expr
    cases: list[Case]


@dataclass
class For(Stmt):
    init: Optional[Stmt]
    cond: Optional[Expr]
    step: Optional[Stmt]
    body: Block


@dataclass
class While(Stmt):
    cond: Expr
    body: Block


@dataclass
class DoWhile(Stmt):
    body: Block
    cond: Expr


@dataclass
class Break(Stmt):
    pass


@dataclass
class Continue(Stmt):
    pass


@dataclass
class Return(Stmt):
    value: Optional[Expr]


@dataclass
class GlobalDecl(Node):
    qualifier: str
    precision: Optional[str]
    type: str
    name: str


@dataclass
class Param(Node):
    type: str
    name: str


@dataclass
class FunctionDecl(Node):
    ret_type: str
    name: str
    params: list[Param]
    body: Block


@dataclass
class Shader(Node):
    globals: list[GlobalDecl]
    functions: list[FunctionDecl]
    diagnostics: list[str] = field(default_factory=list, compare=False, repr=False)

    @property
    def entry(self) -> FunctionDecl:
        for fn in self.functions:
            if fn.name == "main":
                return fn
        raise KeyError("main")

    def global_named(self, name: str) -> Optional[GlobalDecl]:
        for g in self.globals:
            if g.name == name:
                return g
        return None

    def interface(self, qualifier: str) -> list[tuple[str, str]]:
        return [(g.name, g.type) for g in self.globals if g.qualifier == qualifier]


# --- traversal helpers -------------------------------------------------------

def children(node: Node) -> list[Node]:
    """Direct child nodes in source order."""
    if isinstance(node, (FloatLit, IntLit, BoolLit, Var, Break, Continue, IncDec, GlobalDecl, Param)):
        return []
    if isinstance(node, Unary):
        return [node.operand]
    if isinstance(node, Binary):
        return [node.left, node.right]
    if isinstance(node, Call):
        return list(node.args)
    if isinstance(node, Swizzle):
        return [node.base]
    if isinstance(node, Block):
        return list(node.stmts)
    if isinstance(node, VarDecl):
        return [node.init] if node.init is not None else []
    if isinstance(node, Assign):
        return [node.value]
    if isinstance(node, If):
        out: list[Node] = [node.cond, node.then]
        if node.els is not None:
            out.append(node.els)
        return out
    if isinstance(node, Case):
        return list(node.body)
    if isinstance(node, Switch):
        return [node.selector, *node.cases]
    if isinstance(node, For):
        out = []
        if node.init is not None:
            out.append(node.init)
        if node.cond is not None:
            out.append(node.cond)
        if node.step is not None:
            out.append(node.step)
        out.append(node.body)
        return out
    if isinstance(node, While):
        return [node.cond, node.body]
    if isinstance(node, DoWhile):
        return [node.body, node.cond]
    if isinstance(node, Return):
        return [node.value] if node.value is not None else []
    if isinstance(node, FunctionDecl):
        return [*node.params, node.body]
    if isinstance(node, Shader):
        return [*node.globals, *node.functions]
    raise TypeError(f"unknown node {type(node).__name__}")


def walk(node: Node):
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def max_nid(node: Node) -> int:
    return max(n.nid for n in walk(node))


def find(node: Node, nid: int) -> Optional[Node]:
    for n in walk(node):
        if n.nid == nid:
            return n
    return None


def renumber(node: Node, start: int) -> int:
    """Assign fresh sequential ids to every node under ``node``; returns next id."""
    nid = start
    for n in walk(node):
        n.nid = nid
        nid += 1
    return nid
