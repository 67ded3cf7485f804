"""Textual IR: the adapter wire format and the pass-trace snapshot format.

Every operand carries its type, so the format parses without a symbol
table. One item per line; ``;`` starts a comment::

    module   = {global} {function} ;
    global   = "@" NAME "=" ("input" | "output" | "uniform") "global" type ;
    function = "define" "void" "@" NAME "()" "{" {LABEL ":" {inst}} "}" ;
    inst     = ["%" ID "="] OP [PRED] type operand {"," operand}
             | ["%" ID "="] "call" type "@" NAME "(" [operand {"," operand}] ")"
             | "%" ID "=" "load" type "@" NAME
             | "%" ID "=" "phi" type "[" operand "," "%" LABEL "]" {"," ...}
             | "br" "label" "%" LABEL
             | "condbr" operand "," "label" "%" LABEL "," "label" "%" LABEL
             | "switch" operand "," "label" "%" LABEL {"[" type INT "," "label" "%" LABEL "]"}
             | "ret" "void" ;
    operand  = type value | "@" NAME ;
    value    = "%" ID | "undef" | "zeroinitializer" | scalar | "<" ELEM scalar {"," ELEM scalar} ">" ;
    type     = ELEM | "<" N "x" ELEM ">" | "void" | "sampler" ;
    ELEM     = "i1" | "i32" | "half" | "float" ;

PRED is the comparison predicate of ``icmp``/``fcmp``. Float scalars print as
the shortest decimal that round-trips through f32, plus ``inf``/``nan``.
"""

from __future__ import annotations

import math
import re

from .. import fp32 as F
from .core import (Block, Const, Function, GlobalRef, GlobalSlot, Inst, Module, Undef,
                   elem, lanes)

_ROLE_TEXT = {"Input": "input", "Output": "output", "Uniform": "uniform"}
_TEXT_ROLE = {v: k for k, v in _ROLE_TEXT.items()}


class IrParseError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --- printing -------------------------------------------------------------------

def _scalar(ty: str, v) -> str:
    if ty == "i1":
        return "true" if v else "false"
    if ty == "i32":
        return str(v)
    return F.shortest_repr(v)


def value_text(v) -> str:
    if type(v) is Inst:
        return f"%{v.id}"
    if type(v) is GlobalRef:
        return f"@{v.name}"
    if type(v) is Undef:
        return "undef"
    e = elem(v.ty)
    if lanes(v.ty) == 1:
        return _scalar(e, v.value)
    if all((x == 0 and not (isinstance(x, float) and math.copysign(1.0, x) < 0)) for x in v.value):
        return "zeroinitializer"
    return "<" + ", ".join(f"{e} {_scalar(e, x)}" for x in v.value) + ">"


def typed(v) -> str:
    if type(v) is GlobalRef:
        return f"@{v.name}"
    return f"{v.ty} {value_text(v)}"


def inst_text(i: Inst) -> str:
    op = i.op
    if op == "br":
        return f"br label %{i.attrs}"
    if op == "condbr":
        return f"condbr {typed(i.args[0])}, label %{i.attrs[0]}, label %{i.attrs[1]}"
    if op == "switch":
        d, cases = i.attrs
        sel = i.args[0]
        tail = "".join(f" [{sel.ty} {v}, label %{l}]" for v, l in cases)
        return f"switch {typed(sel)}, label %{d}{tail}"
    if op == "ret":
        return "ret void"
    lhs = "" if i.id is None else f"%{i.id} = "
    if op == "call":
        return f"{lhs}call {i.ty} @{i.attrs}({', '.join(typed(a) for a in i.args)})"
    if op == "load":
        return f"{lhs}load {i.ty} @{i.attrs}"
    if op == "phi":
        inc = ", ".join(f"[{typed(a)}, %{l}]" for a, l in zip(i.args, i.attrs))
        return f"{lhs}phi {i.ty} {inc}"
    pred = f" {i.attrs}" if op in ("icmp", "fcmp") else ""
    return f"{lhs}{op}{pred} {i.ty} {', '.join(typed(a) for a in i.args)}"


def print_module(m: Module) -> str:
    out = [f"; module {m.name}"]
    for g in m.globals:
        out.append(f"@{g.name} = {_ROLE_TEXT[g.role]} global {g.ty}")
    for f in m.functions:
        out.append("")
        out.append(f"define void @{f.name}() {{")
        for b in f.blocks:
            out.append(f"{b.label}:")
            for i in b.insts:
                out.append(f"  {inst_text(i)}")
        out.append("}")
    return "\n".join(out) + "\n"


# --- parsing ----------------------------------------------------------------------

_TOK = re.compile(r"""\s*(?:
    (?P<type><\d+\ x\ (?:i1|i32|half|float)>)
  | (?P<local>%[A-Za-z0-9_.]+)
  | (?P<glob>@[A-Za-z0-9_.]+)
  | (?P<num>-?(?:inf|nan|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?))
  | (?P<word>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<punct>[<>\[\](),=:{}])
)""", re.VERBOSE)

_SCALAR_TYPES = {"i1", "i32", "half", "float", "void", "sampler"}


class _Line:
    def __init__(self, text: str, lineno: int):
        self.toks = []
        pos = 0
        text = text.split(";", 1)[0].rstrip()
        while pos < len(text):
            m = _TOK.match(text, pos)
            if m is None or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                raise IrParseError(f"unexpected text {text[pos:]!r}", lineno)
            self.toks.append((m.lastgroup, m.group(m.lastgroup)))
            pos = m.end()
        self.i = 0
        self.lineno = lineno

    def err(self, msg):
        raise IrParseError(msg, self.lineno)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def next(self):
        t = self.peek()
        if t[0] is None:
            self.err("unexpected end of line")
        self.i += 1
        return t

    def expect(self, text):
        k, v = self.next()
        if v != text:
            self.err(f"expected {text!r}, found {v!r}")

    def accept(self, text):
        if self.peek()[1] == text:
            self.i += 1
            return True
        return False

    def done(self):
        return self.i >= len(self.toks)

    def type(self) -> str:
        k, v = self.next()
        if k == "type" or (k == "word" and v in _SCALAR_TYPES):
            return v
        self.err(f"expected type, found {v!r}")


def _scalar_value(e: str, text: str, line: _Line):
    if e == "i1":
        if text not in ("true", "false"):
            line.err(f"bad i1 constant {text!r}")
        return text == "true"
    if e == "i32":
        try:
            return int(text)
        except ValueError:
            line.err(f"bad i32 constant {text!r}")
    if text in ("nan", "-nan"):
        return F.NAN
    try:
        return F.f32(float(text))
    except ValueError:
        line.err(f"bad float constant {text!r}")


class _FnParser:
    def __init__(self):
        self.values: dict[str, Inst] = {}
        self.fixups: list[tuple[Inst, int, str, int]] = []

    def operand(self, line: _Line, ty: str):
        k, v = line.next()
        if k == "local":
            name = v[1:]
            inst = self.values.get(name)
            if inst is None:
                return ("fwd", name)
            return inst
        if v == "undef":
            return Undef(ty)
        if v == "zeroinitializer":
            from .core import zero_const
            return zero_const(ty)
        if v == "<":
            e, n = elem(ty), lanes(ty)
            vals = []
            for idx in range(n):
                if idx:
                    line.expect(",")
                et = line.type()
                if et != e:
                    line.err(f"vector lane type {et} != {e}")
                vals.append(_scalar_value(e, line.next()[1], line))
            line.expect(">")
            return Const(ty, tuple(vals))
        if lanes(ty) != 1:
            line.err(f"expected vector constant for {ty}")
        return Const(ty, _scalar_value(ty, v, line))

    def typed_operand(self, line: _Line):
        k, v = line.peek()
        if k == "glob":
            line.next()
            return GlobalRef(v[1:])
        ty = line.type()
        return self.operand(line, ty)

    def add_args(self, inst: Inst, args: list, line: _Line):
        for k, a in enumerate(args):
            if isinstance(a, tuple) and a[0] == "fwd":
                self.fixups.append((inst, k, a[1], line.lineno))
        inst.args = args

    def label(self, line: _Line) -> str:
        k, v = line.next()
        if k != "local":
            line.err("expected label")
        return v[1:]

    def parse_inst(self, line: _Line) -> Inst:
        k, v = line.peek()
        result = None
        if k == "local":
            line.next()
            result = v[1:]
            line.expect("=")
            if result in self.values:
                line.err(f"value %{result} defined twice")
        k, op = line.next()
        if op == "br":
            line.expect("label")
            inst = Inst(None, "br", "void", [], self.label(line))
        elif op == "condbr":
            c = self.typed_operand(line)
            line.expect(",")
            line.expect("label")
            t = self.label(line)
            line.expect(",")
            line.expect("label")
            f = self.label(line)
            inst = Inst(None, "condbr", "void", [], (t, f))
            self.add_args(inst, [c], line)
        elif op == "switch":
            sel = self.typed_operand(line)
            line.expect(",")
            line.expect("label")
            d = self.label(line)
            cases = []
            while line.accept("["):
                line.type()
                cv = int(line.next()[1])
                line.expect(",")
                line.expect("label")
                cases.append((cv, self.label(line)))
                line.expect("]")
            inst = Inst(None, "switch", "void", [], (d, cases))
            self.add_args(inst, [sel], line)
        elif op == "ret":
            line.expect("void")
            inst = Inst(None, "ret", "void", [])
        elif op == "call":
            ty = line.type()
            k2, callee = line.next()
            if k2 != "glob":
                line.err("expected callee")
            line.expect("(")
            args = []
            if not line.accept(")"):
                while True:
                    args.append(self.typed_operand(line))
                    if line.accept(")"):
                        break
                    line.expect(",")
            inst = Inst(None, "call", ty, [], callee[1:])
            self.add_args(inst, args, line)
        elif op == "load":
            ty = line.type()
            k2, slot = line.next()
            if k2 != "glob":
                line.err("expected slot")
            inst = Inst(None, "load", ty, [], slot[1:])
        elif op == "phi":
            ty = line.type()
            args, labels = [], []
            while True:
                line.expect("[")
                args.append(self.typed_operand(line))
                line.expect(",")
                labels.append(self.label(line))
                line.expect("]")
                if not line.accept(","):
                    break
            inst = Inst(None, "phi", ty, [], labels)
            self.add_args(inst, args, line)
        else:
            pred = None
            if op in ("icmp", "fcmp"):
                pred = line.next()[1]
            ty = line.type()
            args = []
            while not line.done():
                args.append(self.typed_operand(line))
                if not line.accept(","):
                    break
            inst = Inst(None, op, ty, [], pred)
            self.add_args(inst, args, line)
        if not line.done():
            line.err(f"trailing tokens after {op}")
        if result is not None:
            if inst.ty == "void":
                line.err("void instruction cannot define a value")
            try:
                inst.id = int(result)
            except ValueError:
                line.err(f"value names must be numeric, got %{result}")
            self.values[result] = inst
        return inst

    def resolve(self):
        for inst, k, name, lineno in self.fixups:
            target = self.values.get(name)
            if target is None:
                raise IrParseError(f"use of undefined value %{name}", lineno)
            inst.args[k] = target


def parse_module(text: str) -> Module:
    m = Module("module")
    fn = None
    block = None
    fp = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if stripped.startswith("; module "):
            m.name = stripped[len("; module "):].strip()
            continue
        line = _Line(raw, lineno)
        if line.done():
            continue
        k, v = line.peek()
        if fn is None:
            if k == "glob":
                line.next()
                line.expect("=")
                role = line.next()[1]
                if role not in _TEXT_ROLE:
                    line.err(f"unknown slot role {role!r}")
                line.expect("global")
                ty = line.type()
                m.globals.append(GlobalSlot(v[1:], ty, _TEXT_ROLE[role]))
            elif v == "define":
                line.next()
                line.expect("void")
                name = line.next()[1][1:]
                line.expect("(")
                line.expect(")")
                fn = Function(name)
                fp = _FnParser()
            else:
                line.err(f"unexpected {v!r} at top level")
            continue
        if v == "}" or raw.strip() == "}":
            fp.resolve()
            m.functions.append(fn)
            fn = block = None
            continue
        if k == "word" and len(line.toks) == 2 and line.toks[1][1] == ":":
            block = Block(v)
            fn.blocks.append(block)
            continue
        if block is None:
            line.err("instruction outside a block")
        block.insts.append(fp.parse_inst(line))
    if fn is not None:
        raise IrParseError("unterminated function", len(text.splitlines()))
    if not m.functions:
        raise IrParseError("no function defined", 1)
    return m
