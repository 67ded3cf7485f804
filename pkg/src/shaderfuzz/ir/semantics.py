"""Value semantics of pure IR opcodes, shared by the runtime and constant folding."""

from __future__ import annotations

from .. import fp32 as F
from .core import MATH_INTRINSICS, RSQ, MIX, lanes


class IrTrap(Exception):
    """Runtime fault raised while evaluating an instruction."""


def _isdiv(a, b):
    if b == 0:
        raise IrTrap("IntDivByZero")
    return F.sdiv(a, b)


BINARY = {
    "fadd": F.fadd,
    "fsub": F.fsub,
    "fmul": F.fmul,
    "fdiv": F.fdiv,
    "add": lambda a, b: F.wrap32(a + b),
    "sub": lambda a, b: F.wrap32(a - b),
    "mul": lambda a, b: F.wrap32(a * b),
    "sdiv": _isdiv,
    "and": lambda a, b: a and b,
    "or": lambda a, b: a or b,
    "xor": lambda a, b: a != b,
}

ICMP = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "slt": lambda a, b: a < b,
    "sle": lambda a, b: a <= b,
    "sgt": lambda a, b: a > b,
    "sge": lambda a, b: a >= b,
}

FCMP = {
    "oeq": lambda a, b: a == b,
    "une": lambda a, b: a != b,
    "olt": lambda a, b: a < b,
    "ole": lambda a, b: a <= b,
    "ogt": lambda a, b: a > b,
    "oge": lambda a, b: a >= b,
}

CASTS = {
    "sitofp": F.sitofp,
    "fptosi": F.fptosi,
    "zext": lambda b: 1 if b else 0,
    "fpext": lambda x: x,
    "fptrunc": lambda x: x,
    "bitcast": lambda x: x,
}

MATH = {
    RSQ: F.frsq,
    "llvm.qgpu.fsqrt": F.fsqrt,
    "llvm.qgpu.fabs": F.fabs,
    "llvm.qgpu.fsin": F.fsin,
    "llvm.qgpu.fcos": F.fcos,
    "llvm.qgpu.ffloor": F.ffloor,
    "llvm.qgpu.fmin": F.fmin,
    "llvm.qgpu.fmax": F.fmax,
    MIX: F.fmix,
}


def lanewise(f, ty: str, *vals):
    if lanes(ty) == 1 and not isinstance(vals[0], tuple):
        return f(*vals)
    return tuple(map(f, *vals))


def evaluate(op: str, ty: str, attrs, vals: list, arg_ty: str = None):
    """Evaluate a pure instruction over concrete operand values.

    ``arg_ty`` is the type of the first operand, needed for comparisons and casts.
    Raises IrTrap on integer division by zero.
    """
    f = BINARY.get(op)
    if f is not None:
        a, b = vals
        if isinstance(a, tuple):
            return tuple(map(f, a, b))
        return f(a, b)
    if op == "fneg":
        a = vals[0]
        return tuple(-x for x in a) if isinstance(a, tuple) else -a
    if op == "icmp" or op == "fcmp":
        f = (ICMP if op == "icmp" else FCMP)[attrs]
        a, b = vals
        if isinstance(a, tuple):
            return tuple(map(f, a, b))
        return f(a, b)
    if op == "select":
        return vals[1] if vals[0] else vals[2]
    f = CASTS.get(op)
    if f is not None:
        a = vals[0]
        if isinstance(a, tuple):
            return tuple(map(f, a))
        return f(a)
    if op == "extractelement":
        return vals[0][vals[1]]
    if op == "insertelement":
        v = list(vals[0])
        v[vals[2]] = vals[1]
        return tuple(v)
    if op == "call" and attrs in MATH:
        f = MATH[attrs]
        if isinstance(vals[0], tuple):
            return tuple(map(f, *vals))
        return f(*vals)
    raise KeyError(f"no pure semantics for {op} {attrs or ''}".strip())


def is_foldable(op: str, attrs) -> bool:
    if op in BINARY or op in CASTS or op in ("fneg", "icmp", "fcmp", "select", "extractelement", "insertelement"):
        return True
    return op == "call" and attrs in MATH_INTRINSICS
