"""Canonical pretty printer. Output always reparses to a structurally equal AST."""

from __future__ import annotations

from ..fp32 import shortest_repr
from . import ast as A
from .parser import PRECEDENCE, UNARY_PREC

INDENT = "    "


def expr_text(e: A.Expr) -> str:
    return _expr(e, 0)


def _literal_negative(e: A.Expr) -> bool:
    if isinstance(e, A.FloatLit):
        return shortest_repr(e.value).startswith("-")
    return isinstance(e, A.IntLit) and e.value < 0


def _expr(e: A.Expr, min_prec: int) -> str:
    if isinstance(e, A.FloatLit):
        s = shortest_repr(e.value)
        if s in ("nan", "inf", "-inf"):
            raise ValueError(f"literal {s} has no source form")
        return s
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Call):
        return f"{e.name}({', '.join(_expr(a, 0) for a in e.args)})"
    if isinstance(e, A.Swizzle):
        base = _expr(e.base, UNARY_PREC + 1)
        return f"{base}.{e.comps}"
    if isinstance(e, A.Unary):
        inner = _expr(e.operand, UNARY_PREC)
        if inner.startswith("-") or (isinstance(e.operand, A.Unary)):
            inner = f"({inner})"
        text = f"{e.op}{inner}"
        return f"({text})" if min_prec > UNARY_PREC else text
    if isinstance(e, A.Binary):
        p = PRECEDENCE[e.op]
        left = _expr(e.left, p)
        right = _expr(e.right, p + 1)
        text = f"{left} {e.op} {right}"
        return f"({text})" if p < min_prec else text
    raise TypeError(type(e).__name__)


def _simple(s: A.Stmt) -> str:
    if isinstance(s, A.VarDecl):
        prefix = f"{s.precision} " if s.precision else ""
        init = f" = {expr_text(s.init)}" if s.init is not None else ""
        return f"{prefix}{s.type} {s.name}{init}"
    if isinstance(s, A.Assign):
        return f"{s.target} {s.op} {expr_text(s.value)}"
    if isinstance(s, A.IncDec):
        return f"{s.target}{s.op}"
    raise TypeError(type(s).__name__)


def _stmt(s: A.Stmt, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    if isinstance(s, (A.VarDecl, A.Assign, A.IncDec)):
        out.append(f"{pad}{_simple(s)};")
    elif isinstance(s, A.Block):
        out.append(f"{pad}{{")
        for c in s.stmts:
            _stmt(c, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, A.If):
        out.append(f"{pad}if ({expr_text(s.cond)}) {{")
        node = s
        while True:
            for c in node.then.stmts:
                _stmt(c, depth + 1, out)
            if node.els is None:
                out.append(f"{pad}}}")
                break
            if isinstance(node.els, A.If):
                node = node.els
                out.append(f"{pad}}} else if ({expr_text(node.cond)}) {{")
                continue
            out.append(f"{pad}}} else {{")
            for c in node.els.stmts:
                _stmt(c, depth + 1, out)
            out.append(f"{pad}}}")
            break
    elif isinstance(s, A.Switch):
        out.append(f"{pad}switch ({expr_text(s.selector)}) {{")
        for case in s.cases:
            label = "default:" if case.label is None else f"case {case.label}:"
            out.append(f"{pad}{label}")
            for c in case.body:
                _stmt(c, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, A.For):
        init = _simple(s.init) if s.init is not None else ""
        cond = expr_text(s.cond) if s.cond is not None else ""
        step = _simple(s.step) if s.step is not None else ""
        head = f"for ({init};{' ' + cond if cond else ''};{' ' + step if step else ''})"
        out.append(f"{pad}{head} {{")
        for c in s.body.stmts:
            _stmt(c, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, A.While):
        out.append(f"{pad}while ({expr_text(s.cond)}) {{")
        for c in s.body.stmts:
            _stmt(c, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, A.DoWhile):
        out.append(f"{pad}do {{")
        for c in s.body.stmts:
            _stmt(c, depth + 1, out)
        out.append(f"{pad}}} while ({expr_text(s.cond)});")
    elif isinstance(s, A.Break):
        out.append(f"{pad}break;")
    elif isinstance(s, A.Continue):
        out.append(f"{pad}continue;")
    elif isinstance(s, A.Return):
        out.append(f"{pad}return;" if s.value is None else f"{pad}return {expr_text(s.value)};")
    else:
        raise TypeError(type(s).__name__)


def pretty_print(shader: A.Shader) -> str:
    out: list[str] = []
    for g in shader.globals:
        prefix = f"{g.precision} " if g.precision else ""
        out.append(f"{g.qualifier} {prefix}{g.type} {g.name};")
    for fn in shader.functions:
        if out:
            out.append("")
        params = ", ".join(f"{p.type} {p.name}" for p in fn.params)
        out.append(f"{fn.ret_type} {fn.name}({params}) {{")
        for s in fn.body.stmts:
            _stmt(s, 1, out)
        out.append("}")
    return "\n".join(out) + "\n"
